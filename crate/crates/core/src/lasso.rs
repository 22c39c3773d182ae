//! Coordinate-descent Lasso for `(1/n)‖y − Xθ‖² + λ‖θ‖₁`.
//!
//! Stationarity of this objective reads `(2/n)Xⱼᵀ(y − Xθ) = λ·sign(θⱼ)` on the
//! support and `|(2/n)Xⱼᵀ(y − Xθ)| ≤ λ` off it; [`kkt_residual`] measures the
//! largest violation of those conditions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::max_eigenvalue;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-6;

/// Full sweeps are interleaved with this many sweeps over the active set.
const ACTIVE_SWEEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub kkt_residual: f64,
    /// Coordinate sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// `{j : |θ̂ⱼ| > support_threshold}`, ascending.
    pub support: Vec<usize>,
    pub support_threshold: f64,
    /// `σ_max(XᵀX/n)`.
    pub max_design_eigen: f64,
}

impl LassoFit {
    pub fn coefficient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coefficients)
    }
}

/// `4·√(log d / n)`.
pub fn lambda_schedule(n: usize, d: usize) -> Result<f64> {
    if n == 0 || d < 2 {
        return Err(Error::invalid(format!(
            "lambda_schedule needs n ≥ 1, d ≥ 2 (n={n}, d={d})"
        )));
    }
    Ok(4.0 * ((d as f64).ln() / n as f64).sqrt())
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &[f64], d: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: d,
        });
    }
    Ok(())
}

fn residual_violation(grad: f64, coef: f64, lambda: f64) -> f64 {
    if coef == 0.0 {
        (grad.abs() - lambda).max(0.0)
    } else {
        (grad - lambda * coef.signum()).abs()
    }
}

/// Largest violation of the Lasso stationarity conditions at `coefficients`.
pub fn kkt_residual(coefficients: &[f64], x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<f64> {
    check_shapes(x, y, coefficients.len())?;
    let n = x.nrows() as f64;
    let theta = DVector::from_column_slice(coefficients);
    let r = DVector::from_column_slice(y) - x * theta;
    let grad = x.tr_mul(&r) * (2.0 / n);
    Ok(grad
        .iter()
        .zip(coefficients)
        .map(|(&g, &c)| residual_violation(g, c, lambda))
        .fold(0.0, f64::max))
}

/// `{j : |θ̂ⱼ| > threshold}` in ascending order.
pub fn support(fit: &LassoFit, threshold: f64) -> Vec<usize> {
    support_of(&fit.coefficients, threshold)
}

pub(crate) fn support_of(coefficients: &[f64], threshold: f64) -> Vec<usize> {
    coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > threshold)
        .map(|(j, _)| j)
        .collect()
}

fn objective(x: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * theta;
    r.norm_squared() / x.nrows() as f64 + lambda * theta.lp_norm(1)
}

pub fn fit_lasso(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    let (n, d) = x.shape();
    check_shapes(x, y, d)?;
    if n == 0 {
        return Err(Error::invalid("lasso needs at least one observation"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be ≥ 0, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be > 0, got {tol}")));
    }
    let nf = n as f64;
    let y_vec = DVector::from_column_slice(y);
    // zⱼ = ‖Xⱼ‖²/n; a zero column pins θⱼ = 0
    let col_sq: Vec<f64> = (0..d).map(|j| x.column(j).norm_squared() / nf).collect();

    let mut theta = DVector::<f64>::zeros(d);
    let mut resid = y_vec.clone();
    let half_lambda = 0.5 * lambda;

    let mut sweeps = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut prev_obj = if cfg!(debug_assertions) {
        objective(x, &y_vec, &theta, lambda)
    } else {
        0.0
    };

    let mut since_full = ACTIVE_SWEEPS;
    while sweeps < max_iter {
        let full = since_full >= ACTIVE_SWEEPS;
        let mut max_change: f64 = 0.0;
        for j in 0..d {
            let old = theta[j];
            if !full && old == 0.0 {
                continue;
            }
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            // ρⱼ = (1/n)Xⱼᵀ(r + Xⱼθⱼ)
            let rho = col.dot(&resid) / nf + col_sq[j] * old;
            let new = soft_threshold(rho, half_lambda) / col_sq[j];
            if new != old {
                resid.axpy(old - new, &col, 1.0);
                theta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        sweeps += 1;
        since_full = if full { 0 } else { since_full + 1 };

        if cfg!(debug_assertions) {
            let obj = objective(x, &y_vec, &theta, lambda);
            debug_assert!(
                obj <= prev_obj + 1e-10 * prev_obj.abs().max(1.0),
                "coordinate descent increased the objective: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }

        if max_change < tol * (1.0 + theta.amax()) {
            if !full {
                // force a full sweep before declaring convergence
                since_full = ACTIVE_SWEEPS;
                continue;
            }
            kkt = kkt_residual(theta.as_slice(), x, y, lambda)?;
            if kkt <= tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        kkt = kkt_residual(theta.as_slice(), x, y, lambda)?;
        converged = kkt <= tol;
    }

    let gram = if d <= n {
        x.tr_mul(x) / nf
    } else {
        x * x.transpose() / nf
    };
    let max_design_eigen = max_eigenvalue(&gram)?;
    let coefficients: Vec<f64> = theta.iter().copied().collect();
    Ok(LassoFit {
        support: support_of(&coefficients, DEFAULT_SUPPORT_THRESHOLD),
        support_threshold: DEFAULT_SUPPORT_THRESHOLD,
        coefficients,
        lambda,
        kkt_residual: kkt,
        iterations: sweeps,
        converged,
        max_design_eigen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shrinkage() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -1.0, 0.2, 0.3, 1.0]);
        let y = [1.0, -0.5, 0.25];
        let grad = x.tr_mul(&DVector::from_column_slice(&y)) * (2.0 / 3.0);
        let lambda = grad.amax() * (1.0 + 1e-12);
        let fit = fit_lasso(&x, &y, lambda, 1e-10, 1000).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        assert!(fit.support.is_empty());
        assert_eq!(kkt_residual(&[0.0, 0.0], &x, &y, lambda).unwrap(), 0.0);
    }

    #[test]
    fn univariate_closed_form() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let fit = fit_lasso(&x, &[2.0], 1.0, 1e-12, 1000).unwrap();
        assert!((fit.coefficients[0] - 1.5).abs() < 1e-12);
        assert!(kkt_residual(&[1.5], &x, &[2.0], 1.0).unwrap() <= 1e-12);
    }

    #[test]
    fn unpenalized_residual_at_zero() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = [1.0, -3.0];
        // (2/n)Xᵀy = (1, −3)
        assert_eq!(kkt_residual(&[0.0, 0.0], &x, &y, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn lambda_values() {
        assert!((lambda_schedule(400, 100).unwrap() - 0.429_193_205_257_869_5).abs() < 1e-12);
        let a = lambda_schedule(100, 50).unwrap();
        let b = lambda_schedule(400, 50).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(lambda_schedule(0, 10).is_err());
        assert!(lambda_schedule(10, 1).is_err());
    }

    #[test]
    fn support_threshold() {
        let fit = LassoFit {
            coefficients: vec![0.3, 1e-12, 0.0],
            lambda: 1.0,
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
            support: vec![],
            support_threshold: 0.0,
            max_design_eigen: 1.0,
        };
        assert_eq!(support(&fit, 1e-8), vec![0]);
        let zero = LassoFit {
            coefficients: vec![0.0; 3],
            ..fit
        };
        assert!(support(&zero, 0.0).is_empty());
    }

    #[test]
    fn shape_errors() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(fit_lasso(&x, &[1.0], 0.1, 1e-7, 10).is_err());
        assert!(fit_lasso(&x, &[1.0, 1.0], -0.1, 1e-7, 10).is_err());
    }
}
