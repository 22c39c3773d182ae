//! LinUCB with the self-normalized ellipsoidal confidence width.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Diagnostics, PolicyOutcome};
use crate::error::{Error, Result};
use crate::model::{argmax, ActionSet, Bandit, SparseInstance};
use crate::rng::RngStream;

/// Rounds between exact recomputations of `V⁻¹` and the cached widths.
const REFRESH_EVERY: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinUcbConfig {
    #[serde(default = "default_one")]
    pub regularization: f64,
    #[serde(default = "default_one")]
    pub confidence_scale: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Bound `S ≥ ‖θ‖₂`; defaults to the true norm.
    #[serde(default)]
    pub param_bound: Option<f64>,
}

fn default_one() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.05
}

impl Default for LinUcbConfig {
    fn default() -> Self {
        Self {
            regularization: 1.0,
            confidence_scale: 1.0,
            delta: default_delta(),
            param_bound: None,
        }
    }
}

impl LinUcbConfig {
    fn validate(&self) -> Result<()> {
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return Err(Error::invalid(format!(
                "regularization must be > 0, got {}",
                self.regularization
            )));
        }
        if !(self.confidence_scale >= 0.0) {
            return Err(Error::invalid("confidence_scale must be ≥ 0"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Ridge state: `V = λI + Σ aaᵀ`, its inverse and `b = Σ Y·a`.
struct Ridge {
    lambda: f64,
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta: DVector<f64>,
}

impl Ridge {
    fn new(d: usize, lambda: f64) -> Self {
        Self {
            lambda,
            v: DMatrix::identity(d, d) * lambda,
            v_inv: DMatrix::identity(d, d) / lambda,
            b: DVector::zeros(d),
            theta: DVector::zeros(d),
        }
    }

    /// Sherman–Morrison update; returns `V⁻¹a` and `1 + aᵀV⁻¹a` from before the update.
    fn update(&mut self, a: &DVector<f64>, y: f64) -> (DVector<f64>, f64) {
        let u = &self.v_inv * a;
        let denom = 1.0 + a.dot(&u);
        self.v_inv.ger(-1.0 / denom, &u, &u, 1.0);
        self.v.ger(1.0, a, a, 1.0);
        self.b.axpy(y, a, 1.0);
        self.theta = &self.v_inv * &self.b;
        (u, denom)
    }

    fn refresh(&mut self) {
        if let Some(chol) = self.v.clone().cholesky() {
            self.v_inv = chol.inverse();
            self.theta = &self.v_inv * &self.b;
        }
    }

    /// `√λ·S + σ·√(2 log(1/δ) + d log(1 + t/(λd)))`, scaled.
    fn beta(&self, t: usize, config: &LinUcbConfig, bound: f64, noise: f64) -> f64 {
        let d = self.b.len() as f64;
        let radius = (2.0 * (1.0 / config.delta).ln()
            + d * (1.0 + t as f64 / (self.lambda * d)).ln())
        .sqrt();
        config.confidence_scale * (self.lambda.sqrt() * bound + noise * radius)
    }
}

pub fn linucb_on(
    bandit: &mut Bandit<'_>,
    config: &LinUcbConfig,
    rng: &mut RngStream,
) -> Result<Diagnostics> {
    config.validate()?;
    let instance = bandit.instance();
    let bound = config
        .param_bound
        .unwrap_or_else(|| instance.theta().norm());
    let noise = instance.noise_std();
    let d = bandit.dim();
    let mut ridge = Ridge::new(d, config.regularization);

    if let Some(set) = bandit.fixed_actions() {
        // cache ‖x‖²_{V⁻¹} for every arm and update it with each rank-one step
        let x = set.matrix();
        let refresh_widths = |ridge: &Ridge| -> Vec<f64> {
            let xv = &x * &ridge.v_inv;
            (0..x.nrows()).map(|i| xv.row(i).dot(&x.row(i))).collect()
        };
        let mut widths = refresh_widths(&ridge);
        while !bandit.is_done() {
            let t = bandit.played();
            let beta = ridge.beta(t, config, bound, noise);
            let means = &x * &ridge.theta;
            let scores: Vec<f64> = means
                .iter()
                .zip(&widths)
                .map(|(m, w)| m + beta * w.max(0.0).sqrt())
                .collect();
            let (i, _) = argmax(&scores);
            let y = bandit.play(i, rng)?;
            let a: DVector<f64> = x.row(i).transpose();
            let (u, denom) = ridge.update(&a, y);
            if (t + 1).is_multiple_of(REFRESH_EVERY) {
                ridge.refresh();
                widths = refresh_widths(&ridge);
            } else {
                let proj = &x * u;
                for (w, p) in widths.iter_mut().zip(proj.iter()) {
                    *w -= p * p / denom;
                }
            }
        }
    } else {
        while !bandit.is_done() {
            let t = bandit.played();
            let beta = ridge.beta(t, config, bound, noise);
            let x = bandit.actions().matrix();
            let means = &x * &ridge.theta;
            let xv = &x * &ridge.v_inv;
            let scores: Vec<f64> = (0..x.nrows())
                .map(|i| means[i] + beta * xv.row(i).dot(&x.row(i)).max(0.0).sqrt())
                .collect();
            let (i, _) = argmax(&scores);
            let a: DVector<f64> = x.row(i).transpose();
            let y = bandit.play(i, rng)?;
            ridge.update(&a, y);
            if (t + 1).is_multiple_of(REFRESH_EVERY) {
                ridge.refresh();
            }
        }
    }
    let mut diag = Diagnostics::default();
    diag.insert("param_bound", bound);
    Ok(diag)
}

pub fn run_linucb(
    actions: &ActionSet,
    instance: &SparseInstance,
    horizon: usize,
    config: &LinUcbConfig,
    rng: &mut RngStream,
) -> Result<PolicyOutcome> {
    let mut bandit = Bandit::fixed(instance, actions, horizon)?;
    let diagnostics = linucb_on(&mut bandit, config, rng)?;
    Ok(PolicyOutcome {
        trajectory: bandit.into_trajectory(),
        diagnostics,
    })
}
