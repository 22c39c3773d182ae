//! Equicorrelated Gaussian contexts.
//!
//! For every coordinate `j` the `N` arm features `(x₁ⱼ,…,x_Nⱼ)` are drawn from
//! `N(0, V)` with `Vᵢᵢ = 1` and `Vᵢₖ = ρ²`, independently across coordinates, and
//! then clipped to `[−1, 1]` so the boundedness assumption holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSet, ContextSource, SparseInstance};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualSpec {
    #[serde(default = "default_arms")]
    pub num_arms: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

fn default_arms() -> usize {
    20
}

fn default_d() -> usize {
    100
}

fn default_s() -> usize {
    5
}

fn default_noise() -> f64 {
    1.0
}

impl Default for ContextualSpec {
    fn default() -> Self {
        Self {
            num_arms: default_arms(),
            d: default_d(),
            s: default_s(),
            rho: 0.0,
            noise_std: default_noise(),
        }
    }
}

impl ContextualSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_arms < 2 {
            return Err(Error::invalid(format!(
                "num_arms must be ≥ 2, got {}",
                self.num_arms
            )));
        }
        if self.d == 0 || self.s == 0 || self.s > self.d {
            return Err(Error::invalid(format!(
                "contextual instance needs 1 ≤ s ≤ d (d={}, s={})",
                self.d, self.s
            )));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Per-round action sets for a [`ContextualSpec`].
#[derive(Debug, Clone)]
pub struct ContextualArms {
    spec: ContextualSpec,
    rng: RngStream,
}

impl ContextualArms {
    pub fn new(spec: ContextualSpec, rng: RngStream) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, rng })
    }

    /// Unclipped features, row per arm.
    pub fn draw_raw(&mut self) -> Vec<Vec<f64>> {
        let (n, d, rho) = (self.spec.num_arms, self.spec.d, self.spec.rho);
        let idio = (1.0 - rho * rho).sqrt();
        let mut rows = vec![vec![0.0; d]; n];
        for j in 0..d {
            let common = self.rng.standard_normal();
            for row in rows.iter_mut() {
                row[j] = rho * common + idio * self.rng.standard_normal();
            }
        }
        rows
    }
}

impl ContextSource for ContextualArms {
    fn dim(&self) -> usize {
        self.spec.d
    }

    fn num_arms(&self) -> usize {
        self.spec.num_arms
    }

    fn next_set(&mut self) -> ActionSet {
        loop {
            let rows: Vec<Vec<f64>> = self
                .draw_raw()
                .into_iter()
                .map(|r| r.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
                .collect();
            // clipping can collide arms in very low dimension; redraw the round
            if let Ok(set) = ActionSet::from_rows(rows) {
                return set;
            }
        }
    }
}

/// `σ_min(E[xxᵀ])` for an arm picked uniformly from a round's set: the
/// coordinates are independent clipped `N(0, 1)` draws with variance `1 − 2φ(1)`.
pub fn uniform_arm_c_min() -> f64 {
    1.0 - 2.0 * (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// The parameter (`s` unit-magnitude entries with random signs at uniformly
/// chosen coordinates) and the context generator.
pub fn contextual_instance(
    spec: &ContextualSpec,
    instance_rng: &mut RngStream,
    context_rng: RngStream,
) -> Result<(ContextualArms, SparseInstance)> {
    spec.validate()?;
    let mut theta = vec![0.0; spec.d];
    for j in rand::seq::index::sample(instance_rng, spec.d, spec.s) {
        theta[j] = instance_rng.sign();
    }
    let instance = SparseInstance::new(theta, spec.s, spec.noise_std)?;
    Ok((ContextualArms::new(spec.clone(), context_rng)?, instance))
}
