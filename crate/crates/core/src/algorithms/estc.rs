//! Explore the sparsity then commit.

use serde::{Deserialize, Serialize};

use super::{collect, commit, Diagnostics, PolicyOutcome};
use crate::design::{covariance, min_eigen, DesignDistribution};
use crate::error::{Error, Result};
use crate::lasso::{fit_lasso, lambda_schedule, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::model::{ActionSet, Bandit, SparseInstance};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstcConfig {
    pub horizon: usize,
    /// Known sparsity; without it the exploration length falls back to `⌈n^{2/3}⌉`.
    #[serde(default)]
    pub sparsity: Option<usize>,
    pub r_max: f64,
    #[serde(default)]
    pub explicit_n1: Option<usize>,
}

impl EstcConfig {
    /// Exploration length for dimension `d` and design quality `c_min`.
    pub fn resolve_n1(&self, d: usize, c_min: f64) -> Result<usize> {
        let n = self.horizon;
        if n == 0 {
            return Err(Error::invalid("horizon must be ≥ 1"));
        }
        if let Some(n1) = self.explicit_n1 {
            return Ok(n1.clamp(1, n));
        }
        match self.sparsity {
            Some(s) => exploration_length(n, d, s, self.r_max, c_min),
            None => Ok(((n as f64).powf(2.0 / 3.0).ceil() as usize).clamp(1, n)),
        }
    }
}

/// `⌈n^{2/3} (s² log 2d)^{1/3} R_max^{−2/3} (2/C_min²)^{1/3}⌉`, clamped to `[1, n]`.
pub fn exploration_length(n: usize, d: usize, s: usize, r_max: f64, c_min: f64) -> Result<usize> {
    if n == 0 || s == 0 || d < 2 || !(r_max > 0.0) || !(c_min > 0.0) {
        return Err(Error::invalid(format!(
            "exploration_length needs positive inputs and d ≥ 2 (n={n}, d={d}, s={s}, r_max={r_max}, c_min={c_min})"
        )));
    }
    let s = s as f64;
    let raw = (n as f64).powf(2.0 / 3.0)
        * (s * s * (2.0 * d as f64).ln()).cbrt()
        * r_max.powf(-2.0 / 3.0)
        * (2.0 / (c_min * c_min)).cbrt();
    if !raw.is_finite() || raw >= n as f64 {
        return Ok(n);
    }
    Ok((raw.ceil() as usize).max(1))
}

/// How exploration rounds choose their action.
#[derive(Debug, Clone, Copy)]
pub enum Exploration<'a> {
    /// Draw i.i.d. from a design over a fixed action set.
    Design(&'a DesignDistribution),
    /// Draw an arm uniformly from the current (possibly changing) action set.
    UniformArm,
}

/// Runs ESTC with `n1` exploration rounds on `bandit`.
pub fn estc_on(
    bandit: &mut Bandit<'_>,
    n1: usize,
    exploration: Exploration<'_>,
    rng: &mut RngStream,
) -> Result<Diagnostics> {
    let n1 = n1.clamp(1, bandit.horizon().max(1)).min(bandit.remaining());
    if let Exploration::Design(design) = exploration {
        let set = bandit
            .fixed_actions()
            .ok_or_else(|| Error::invalid("design exploration needs a fixed action set"))?;
        design.validate_for(set)?;
    }
    let (x, y) = collect(bandit, n1, rng, |b, rng| match exploration {
        Exploration::Design(design) => design.sample(rng),
        Exploration::UniformArm => rng.below(b.actions().len()),
    })?;

    let mut diag = Diagnostics::default();
    diag.insert("n1", n1);
    if bandit.is_done() {
        return Ok(diag);
    }
    let lambda = lambda_schedule(n1, bandit.dim())?;
    let fit = fit_lasso(&x, &y, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    diag.insert("lambda", lambda);
    diag.insert("lasso_converged", fit.converged);
    diag.insert("lasso_kkt", fit.kkt_residual);
    diag.insert("support", fit.support.clone());
    if let Some(best) = commit(bandit, &fit.coefficient_vector(), rng)? {
        diag.insert("committed_action", best);
    }
    Ok(diag)
}

/// ESTC on a fixed action set; `C_min` is taken as `σ_min` of the supplied design.
pub fn run_estc(
    actions: &ActionSet,
    instance: &SparseInstance,
    config: &EstcConfig,
    design: &DesignDistribution,
    rng: &mut RngStream,
) -> Result<PolicyOutcome> {
    let sigma_min = min_eigen(&covariance(design, actions)?)?.0;
    let n1 = config.resolve_n1(actions.dim(), sigma_min.max(f64::MIN_POSITIVE))?;
    let mut bandit = Bandit::fixed(instance, actions, config.horizon)?;
    let mut diagnostics = estc_on(&mut bandit, n1, Exploration::Design(design), rng)?;
    diagnostics.insert("design_sigma_min", sigma_min);
    Ok(PolicyOutcome {
        trajectory: bandit.into_trajectory(),
        diagnostics,
    })
}
