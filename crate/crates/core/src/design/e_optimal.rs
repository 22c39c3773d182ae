//! Frank–Wolfe for the E-optimal design `max_μ σ_min(Σ_μ)`.
//!
//! `σ_min` is concave but not smooth where the smallest eigenvalue is repeated,
//! which is the typical situation at the optimum. The iterations therefore run on
//! the soft-min `f_t(Σ) = −t log Σᵢ exp(−λᵢ/t)`, whose gradient is the
//! trace-one matrix `W = Σᵢ ωᵢvᵢvᵢᵀ` with softmax weights `ωᵢ`. Weak duality
//! (`σ_min(Σ_μ) ≤ ⟨W, Σ_μ⟩ ≤ maxₓ xᵀWx` for every feasible `μ`) turns any such `W`
//! into the certificate
//!
//! ```text
//! fw_gap = maxₓ xᵀWx − σ_min(Σ_μ̂) ≥ C_min(𝒜) − σ_min(Σ_μ̂),
//! ```
//!
//! which reduces to `maxₓ (xᵀv)² − vᵀΣv` when `W = vvᵀ`. The temperature is lowered
//! until the smoothing bias is below half the tolerance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{require_spanning, weighted_gram, DesignCertificate, DesignDistribution};
use super::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::ActionSet;

#[derive(Debug, Clone, Copy)]
pub struct EOptimalOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EOptimalOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

pub fn solve_e_optimal(
    actions: &ActionSet,
    tol: f64,
    max_iter: usize,
) -> Result<(DesignDistribution, DesignCertificate)> {
    let points = actions.matrix();
    let (weights, cert) = e_optimal_weights(&points, tol, max_iter)?;
    Ok((
        DesignDistribution::from_weights(&weights, actions.dim())?,
        cert,
    ))
}

/// `C_min(𝒜)` up to `tol`.
pub fn c_min(actions: &ActionSet, tol: f64) -> Result<f64> {
    solve_e_optimal(actions, tol, DEFAULT_MAX_ITER).map(|(_, cert)| cert.objective)
}

/// Eigendecomposition with eigenvalues in ascending order.
struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    fn new(sigma: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(sigma.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        Self {
            values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
            vectors: eig.eigenvectors.select_columns(&order),
        }
    }

    fn min(&self) -> f64 {
        self.values[0]
    }

    fn softmax_weights(&self, t: f64) -> Vec<f64> {
        let min = self.min();
        let mut w: Vec<f64> = self.values.iter().map(|l| (-(l - min) / t).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= z);
        w
    }
}

fn softmin(values: &[f64], t: f64) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = values.iter().map(|l| (-(l - min) / t).exp()).sum();
    min - t * z.ln()
}

/// Terms further than this many temperatures above the minimum are dropped from
/// the soft-min; each contributes less than `e^{−40}`.
const SOFTMIN_CUTOFF: f64 = 40.0;

/// Soft-min of the eigenvalues of `a·Λ + b·uuᵀ`, for `Λ = diag(values)` sorted
/// ascending and `a ≥ 0`.
///
/// The eigenvalues solve the secular equation `1 + b Σₖ wₖ/(pₖ − μ) = 0` between
/// consecutive poles `pₖ = aλₖ`. Repeated poles are merged and poles with no
/// weight keep their eigenvalue, so only the low roots that matter at
/// temperature `t` are located, by bisection.
fn rank_one_softmin(values: &[f64], u: &[f64], a: f64, b: f64, t: f64) -> f64 {
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let u_sq: f64 = u.iter().map(|x| x * x).sum();
    let mut fixed: Vec<f64> = Vec::new();
    let mut poles: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let rep = values[i];
        let mut w = 0.0;
        let mut j = i;
        while j < values.len() && values[j] - rep <= 1e-12 * scale {
            w += u[j] * u[j];
            j += 1;
        }
        let p = a * rep;
        fixed.extend(std::iter::repeat_n(p, j - i - 1));
        if b == 0.0 || w <= 1e-28 * u_sq.max(1.0) {
            fixed.push(p);
        } else {
            poles.push((p, w));
        }
        i = j;
    }

    // f(μ) = 1 + b Σ wₖ/(pₖ − μ) and f′(μ) = b Σ wₖ/(pₖ − μ)²
    let secular = |mu: f64| {
        poles.iter().fold((1.0, 0.0), |(f, df), &(p, w)| {
            let r = 1.0 / (p - mu);
            (f + b * w * r, df + b * w * r * r)
        })
    };
    // Newton safeguarded by bisection; f is monotone on each bracket
    let root = |lo: f64, hi: f64| {
        let (mut lo, mut hi) = (lo, hi);
        let mut mu = 0.5 * (lo + hi);
        for _ in 0..100 {
            if !(mu > lo && mu < hi) {
                break;
            }
            let (f, df) = secular(mu);
            if f == 0.0 {
                return mu;
            }
            if (f < 0.0) == (b > 0.0) {
                lo = mu;
            } else {
                hi = mu;
            }
            let newton = mu - f / df;
            let next = if newton > lo && newton < hi && df.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - mu).abs() <= 1e-15 * scale.max(mu.abs()) {
                return next;
            }
            mu = next;
        }
        0.5 * (lo + hi)
    };

    let mut found = fixed;
    let fixed_min = found.iter().copied().fold(f64::INFINITY, f64::min);
    let w_total: f64 = poles.iter().map(|p| p.1).sum();
    let m = poles.len();
    let mut floor = fixed_min;
    for k in 0..m {
        let (lo, hi) = if b > 0.0 {
            let hi = if k + 1 < m {
                poles[k + 1].0
            } else {
                poles[k].0 + b * w_total
            };
            (poles[k].0, hi)
        } else {
            let lo = if k == 0 {
                poles[0].0 + b * w_total
            } else {
                poles[k - 1].0
            };
            (lo, poles[k].0)
        };
        if lo > floor + SOFTMIN_CUTOFF * t {
            break;
        }
        let mu = root(lo, hi);
        floor = floor.min(mu);
        found.push(mu);
    }
    softmin(&found, t)
}

/// Maximizer of a concave function on `[0, hi]` by golden-section search.
fn golden_section_max(f: impl Fn(f64) -> f64, hi: f64, iters: usize) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (0.0, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // endpoints are candidates too: the slice can be monotone
    let mid = 0.5 * (a + b);
    let candidates = [(mid, f(mid)), (hi, f(hi))];
    candidates
        .into_iter()
        .filter(|c| c.1.is_finite())
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|c| c.0)
        .unwrap_or(f64::NAN)
}

pub(crate) fn e_optimal_weights(
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
    let mut sigma = weighted_gram(points, &w);

    let log_d = (d.max(2) as f64).ln();
    let t_final = tol / (2.0 * log_d);
    let mut t = (sigma.trace() / d as f64 / log_d).max(t_final);

    let mut iterations = 0;
    loop {
        let spec = Spectrum::new(&sigma);
        let omega = spec.softmax_weights(t);
        // gᵢ = xᵢᵀWxᵢ = Σⱼ ωⱼ (xᵢᵀvⱼ)², skipping eigenvectors with negligible weight
        let live: Vec<usize> = (0..d).filter(|&j| omega[j] > 1e-18).collect();
        let proj = points * spec.vectors.select_columns(&live);
        let grad: Vec<f64> = (0..k)
            .map(|i| {
                proj.row(i)
                    .iter()
                    .zip(&live)
                    .map(|(p, &j)| omega[j] * p * p)
                    .sum()
            })
            .collect();
        let smooth_value: f64 = omega.iter().zip(&spec.values).map(|(o, l)| o * l).sum();

        let (fwd, g_max) = grad
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty action set");
        let fw_gap = (g_max - spec.min()).max(0.0);

        if fw_gap <= tol || iterations >= max_iter {
            let cert = DesignCertificate {
                objective: spec.min(),
                fw_gap,
                iterations,
                converged: fw_gap <= tol,
            };
            return Ok((w, cert));
        }
        iterations += 1;

        let smooth_gap = g_max - smooth_value;
        let bias = smooth_value - spec.min();
        if bias > smooth_gap && t > t_final {
            t = (0.5 * t).max(t_final);
            continue;
        }

        // away vertex: worst supported action
        let (away, g_min) = grad
            .iter()
            .copied()
            .enumerate()
            .filter(|&(i, _)| w[i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("design has support");
        let away_gap = smooth_value - g_min;

        let (vertex, sign, gamma_max) = if smooth_gap >= away_gap || w[away] >= 1.0 {
            (fwd, 1.0, 1.0)
        } else {
            (away, -1.0, w[away] / (1.0 - w[away]))
        };
        let x: DVector<f64> = points.row(vertex).transpose();
        let u = spec.vectors.tr_mul(&x);
        // Σ + γ·sign·(xxᵀ − Σ) = (1 − sign·γ)Σ + sign·γ·xxᵀ
        let phi = |gamma: f64| {
            rank_one_softmin(
                &spec.values,
                u.as_slice(),
                1.0 - sign * gamma,
                sign * gamma,
                t,
            )
        };
        let mut gamma = golden_section_max(phi, gamma_max, 40);
        if !gamma.is_finite() {
            gamma = 2.0 / (iterations as f64 + 2.0) * gamma_max;
        }
        if gamma <= 0.0 {
            // no ascent along this vertex at this temperature
            if t > t_final {
                t = (0.5 * t).max(t_final);
            }
            continue;
        }

        // μ ← μ + γ·sign·(e_vertex − μ)
        let step = sign * gamma;
        for wi in w.iter_mut() {
            *wi *= 1.0 - step;
        }
        w[vertex] += step;
        if sign < 0.0 && (gamma - gamma_max).abs() <= 1e-12 * gamma_max.max(1.0) {
            w[vertex] = 0.0;
        }
        for wi in w.iter_mut() {
            if *wi < 0.0 {
                *wi = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi /= total;
        }
        sigma *= 1.0 - step;
        sigma.ger(step, &x, &x, 1.0);
        // refresh against accumulated drift
        if iterations % 50 == 0 {
            sigma = weighted_gram(points, &w);
        }
    }
}
