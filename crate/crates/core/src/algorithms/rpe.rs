//! Restricted phased elimination: screen the support with the Lasso, then run
//! phased elimination on the selected coordinates.

use serde::{Deserialize, Serialize};

use super::phased::{phased_elimination_core, report_diagnostics};
use super::{collect, Diagnostics, PolicyOutcome};
use crate::design::{covariance, min_eigen, DesignDistribution};
use crate::error::{Error, Result};
use crate::lasso::{fit_lasso, lambda_schedule, support, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model::{ActionSet, Bandit, SparseInstance};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeConfig {
    pub horizon: usize,
    pub sparsity: usize,
    /// Known lower bound `m` on the nonzero `|θⱼ|`.
    pub min_signal: f64,
    #[serde(default = "default_c1")]
    pub c1_constant: f64,
    #[serde(default = "default_delta")]
    pub elimination_delta: f64,
}

fn default_c1() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.1
}

impl RpeConfig {
    /// `⌈C₁ s log d / (m² C_min)⌉`, clamped to `[1, n]`.
    pub fn resolve_n2(&self, d: usize, c_min: f64) -> Result<usize> {
        if self.horizon == 0 || self.sparsity == 0 || d < 2 {
            return Err(Error::invalid("restricted PE needs n ≥ 1, s ≥ 1 and d ≥ 2"));
        }
        if !(self.min_signal > 0.0 && self.c1_constant > 0.0 && c_min > 0.0) {
            return Err(Error::invalid(format!(
                "min_signal, c1_constant and c_min must be > 0 (m={}, c1={}, c_min={c_min})",
                self.min_signal, self.c1_constant
            )));
        }
        if !(self.elimination_delta > 0.0 && self.elimination_delta < 1.0) {
            return Err(Error::invalid(format!(
                "elimination_delta must lie in (0, 1), got {}",
                self.elimination_delta
            )));
        }
        let raw = self.c1_constant * self.sparsity as f64 * (d as f64).ln()
            / (self.min_signal * self.min_signal * c_min);
        if !raw.is_finite() || raw >= self.horizon as f64 {
            return Ok(self.horizon);
        }
        Ok((raw.ceil() as usize).max(1))
    }
}

/// Restricted phased elimination on the fixed action set of `bandit`.
pub fn restricted_pe_on(
    bandit: &mut Bandit<'_>,
    config: &RpeConfig,
    design: &DesignDistribution,
    c_min: f64,
    rng: &mut RngStream,
) -> Result<Diagnostics> {
    let set = bandit
        .fixed_actions()
        .ok_or_else(|| Error::invalid("restricted PE needs a fixed action set"))?;
    design.validate_for(set)?;
    let d = set.dim();
    let n2 = config.resolve_n2(d, c_min)?.min(bandit.remaining());
    let (x, y) = collect(bandit, n2, rng, |_, rng| design.sample(rng))?;

    let mut diag = Diagnostics::default();
    diag.insert("n2", n2);
    if bandit.is_done() {
        return Ok(diag);
    }
    let lambda = lambda_schedule(n2, d)?;
    let fit = fit_lasso(&x, &y, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mut screened = support(&fit, config.min_signal / 2.0);
    let fallback = screened.is_empty();
    if fallback {
        let (j, _) =
            fit.coefficients
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, c)| {
                    if c.abs() > best.1 {
                        (j, c.abs())
                    } else {
                        best
                    }
                });
        screened = vec![j];
    }
    diag.insert("lambda", lambda);
    diag.insert("lasso_converged", fit.converged);
    diag.insert("lasso_kkt", fit.kkt_residual);
    diag.insert("phi_max", fit.max_design_eigen);
    diag.insert("support", screened.clone());
    diag.insert("support_fallback", fallback);

    // estimation uses the projected features; the arms played are the originals
    let projected = set.matrix().select_columns(&screened);
    let budget = bandit.remaining();
    let report = phased_elimination_core(&projected, budget, config.elimination_delta, |i| {
        bandit.play(i, rng)
    })?;
    diag.extend(report_diagnostics(&report));
    Ok(diag)
}

/// Restricted PE on a fixed action set; `C_min` is taken as `σ_min` of the supplied design.
pub fn run_restricted_pe(
    actions: &ActionSet,
    instance: &SparseInstance,
    config: &RpeConfig,
    design: &DesignDistribution,
    rng: &mut RngStream,
) -> Result<PolicyOutcome> {
    let sigma_min = min_eigen(&covariance(design, actions)?)?.0;
    let mut bandit = Bandit::fixed(instance, actions, config.horizon)?;
    let mut diagnostics = restricted_pe_on(
        &mut bandit,
        config,
        design,
        sigma_min.max(f64::MIN_POSITIVE),
        rng,
    )?;
    diagnostics.insert("design_sigma_min", sigma_min);
    Ok(PolicyOutcome {
        trajectory: bandit.into_trajectory(),
        diagnostics,
    })
}
