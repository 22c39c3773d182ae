//! G-optimal design via Frank–Wolfe on `log det V(μ)` with away steps.
//!
//! By the Kiefer–Wolfowitz theorem the D- and G-optimal designs coincide and the
//! optimal maximum leverage equals the dimension, so `maxₓ xᵀV⁻¹x ≤ (1+tol)·d` is
//! a direct optimality test.

use nalgebra::DMatrix;

use super::{require_spanning, weighted_gram, DesignCertificate, DesignDistribution};
use crate::error::{Error, Result};
use crate::model::ActionSet;

pub fn solve_g_optimal(
    actions: &ActionSet,
    tol: f64,
    max_iter: usize,
) -> Result<(DesignDistribution, DesignCertificate)> {
    let points = actions.matrix();
    let (weights, cert) = g_optimal_weights(&points, tol, max_iter)?;
    Ok((
        DesignDistribution::from_weights(&weights, actions.dim())?,
        cert,
    ))
}

/// Leverages `xᵢᵀV⁻¹xᵢ` of every row.
fn leverages(points: &DMatrix<f64>, weights: &[f64]) -> Option<Vec<f64>> {
    let v = weighted_gram(points, weights);
    let chol = v.cholesky()?;
    // rows of X·V⁻¹
    let solved = chol.solve(&points.transpose());
    Some(
        (0..points.nrows())
            .map(|i| points.row(i).transpose().dot(&solved.column(i)))
            .collect(),
    )
}

pub(crate) fn g_optimal_weights(
    points: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, DesignCertificate)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tol must be > 0, got {tol}")));
    }
    let (k, d) = points.shape();
    let start = require_spanning(points)?;
    let mut w = vec![0.0; k];
    for &i in &start {
        w[i] = 1.0 / start.len() as f64;
    }
    let dim = d as f64;

    let mut iterations = 0;
    loop {
        let g = leverages(points, &w).ok_or(Error::NotSpanning { dim: d, rank: 0 })?;
        let (fwd, g_max) = g
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let converged = g_max <= (1.0 + tol) * dim;
        if converged || iterations >= max_iter {
            let cert = DesignCertificate {
                objective: g_max,
                fw_gap: (g_max - dim).max(0.0),
                iterations,
                converged,
            };
            return Ok((w, cert));
        }
        iterations += 1;

        let (away, g_min) = g
            .iter()
            .copied()
            .enumerate()
            .filter(|&(i, _)| w[i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty support");

        // exact line search for log det along e_j − μ: γ* = (g − d) / (d (g − 1))
        let (vertex, gamma) = if g_max - dim >= dim - g_min || w[away] >= 1.0 {
            (fwd, (g_max - dim) / (dim * (g_max - 1.0)))
        } else {
            let floor = -w[away] / (1.0 - w[away]);
            let gamma = if g_min <= 1.0 {
                floor
            } else {
                ((g_min - dim) / (dim * (g_min - 1.0))).max(floor)
            };
            (away, gamma)
        };
        for wi in w.iter_mut() {
            *wi *= 1.0 - gamma;
        }
        w[vertex] += gamma;
        if w[vertex] < 1e-15 {
            w[vertex] = 0.0;
        }
        let total: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi = wi.max(0.0) / total;
        }
    }
}
