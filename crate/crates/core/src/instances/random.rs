//! Simple fixed-action environments for tests and experiments.

use serde::{Deserialize, Serialize};

use super::GeneratedInstance;
use crate::error::{Error, Result};
use crate::model::{ActionSet, SparseInstance};
use crate::rng::RngStream;

/// `K` actions uniform on `[−1, 1]^d` and an `s`-sparse `θ` with entries `±signal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub num_actions: usize,
    pub d: usize,
    pub s: usize,
    #[serde(default = "default_one")]
    pub signal: f64,
    #[serde(default = "default_one")]
    pub noise_std: f64,
}

fn default_one() -> f64 {
    1.0
}

pub fn random_instance(spec: &RandomSpec, rng: &mut RngStream) -> Result<GeneratedInstance> {
    if spec.num_actions == 0 || spec.d == 0 || spec.s == 0 || spec.s > spec.d {
        return Err(Error::invalid(format!(
            "random instance needs K ≥ 1 and 1 ≤ s ≤ d (K={}, d={}, s={})",
            spec.num_actions, spec.d, spec.s
        )));
    }
    if !(spec.signal > 0.0 && spec.signal.is_finite()) {
        return Err(Error::invalid(format!(
            "signal must be > 0, got {}",
            spec.signal
        )));
    }
    let rows: Vec<Vec<f64>> = (0..spec.num_actions)
        .map(|_| (0..spec.d).map(|_| 2.0 * rng.uniform() - 1.0).collect())
        .collect();
    let mut theta = vec![0.0; spec.d];
    for j in rand::seq::index::sample(rng, spec.d, spec.s) {
        theta[j] = spec.signal * rng.sign();
    }
    Ok(GeneratedInstance {
        actions: ActionSet::from_rows(rows)?,
        instance: SparseInstance::new(theta, spec.s, spec.noise_std)?,
        informative: vec![false; spec.num_actions],
    })
}

/// Standard basis actions with `θ = gap·e₁`, so every suboptimal action has gap `gap`.
pub fn basis_instance(d: usize, gap: f64, noise_std: f64) -> Result<GeneratedInstance> {
    if d == 0 {
        return Err(Error::invalid("basis instance needs d ≥ 1"));
    }
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::invalid(format!("gap must lie in (0, 1], got {gap}")));
    }
    let rows = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut theta = vec![0.0; d];
    theta[0] = gap;
    Ok(GeneratedInstance {
        actions: ActionSet::from_rows(rows)?,
        instance: SparseInstance::new(theta, 1, noise_std)?,
        informative: vec![false; d],
    })
}
