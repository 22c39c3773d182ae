//! Phased elimination with G-optimal exploration for finitely many arms.
//!
//! Phase `ℓ` works in an orthonormal basis of the span of the surviving actions,
//! pulls each atom `x` of a G-optimal design `⌈2r·μ(x)/ε_ℓ² · log(Kℓ(ℓ+1)/δ)⌉`
//! times (`r` = dimension of the span, `ε_ℓ = 2^{−ℓ}`), fits least squares on that
//! phase's data only and drops every action whose estimated gap exceeds `2ε_ℓ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Diagnostics, PolicyOutcome};
use crate::design::g_optimal_weights;
use crate::error::{Error, Result};
use crate::model::{ActionSet, Bandit, SparseInstance};
use crate::rng::RngStream;

const DESIGN_TOL: f64 = 1e-2;
const DESIGN_MAX_ITER: usize = 5000;
/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

/// Snapshot of one completed (or truncated) phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseState {
    pub phase_index: usize,
    pub accuracy: f64,
    /// Indices (into the feature rows) alive at the start of the phase.
    pub live_actions: Vec<usize>,
    pub design: Vec<(usize, f64)>,
    pub pull_counts: Vec<(usize, usize)>,
    /// Least-squares estimate in feature coordinates; absent if the phase was cut short.
    pub estimate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phases: Vec<PhaseState>,
    pub live_actions: Vec<usize>,
    /// Phases whose Gram matrix needed a pseudo-inverse.
    pub pinv_fallbacks: usize,
}

/// Orthonormal basis `B` of the row space of `rows` (as columns) and the
/// coordinates `rows · B`.
fn span_coordinates(rows: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let svd = rows.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * top && top > 0.0)
        .collect();
    let basis = v_t.select_rows(&keep).transpose();
    (rows * &basis, basis)
}

/// Runs phased elimination over the rows of `features` for `budget` rounds.
///
/// `pull(i)` plays row `i` and returns the reward; playing is delegated so callers
/// can estimate in projected coordinates while pulling the original actions.
pub(crate) fn phased_elimination_core(
    features: &DMatrix<f64>,
    budget: usize,
    delta: f64,
    mut pull: impl FnMut(usize) -> Result<f64>,
) -> Result<PhaseReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let k = features.nrows();
    if k == 0 {
        return Err(Error::invalid(
            "phased elimination needs at least one action",
        ));
    }
    let mut report = PhaseReport {
        live_actions: (0..k).collect(),
        ..Default::default()
    };
    let mut remaining = budget;
    let mut phase = 1;
    while remaining > 0 {
        let live = report.live_actions.clone();
        let (coords, basis) = span_coordinates(&features.select_rows(&live));
        let r = coords.ncols();
        if live.len() == 1 || r == 0 {
            // nothing left to learn: play the first survivor
            for _ in 0..remaining {
                pull(live[0])?;
            }
            break;
        }
        let accuracy = 0.5f64.powi(phase as i32);
        let (weights, _) = g_optimal_weights(&coords, DESIGN_TOL, DESIGN_MAX_ITER)?;
        let log_term = (k as f64 * phase as f64 * (phase as f64 + 1.0) / delta).ln();

        let mut gram = DMatrix::<f64>::zeros(r, r);
        let mut moment = DVector::<f64>::zeros(r);
        let mut design = Vec::new();
        let mut pull_counts = Vec::new();
        let mut truncated = false;
        for (pos, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let wanted = (2.0 * r as f64 * w / (accuracy * accuracy) * log_term).ceil() as usize;
            let pulls = wanted.min(remaining);
            let z: DVector<f64> = coords.row(pos).transpose();
            for _ in 0..pulls {
                let y = pull(live[pos])?;
                moment.axpy(y, &z, 1.0);
            }
            gram.ger(pulls as f64, &z, &z, 1.0);
            remaining -= pulls;
            design.push((live[pos], w));
            pull_counts.push((live[pos], pulls));
            if pulls < wanted {
                truncated = true;
                break;
            }
        }

        let mut state = PhaseState {
            phase_index: phase,
            accuracy,
            live_actions: live.clone(),
            design,
            pull_counts,
            estimate: None,
        };
        if truncated {
            report.phases.push(state);
            break;
        }
        let theta = match gram.clone().cholesky() {
            Some(chol) => chol.solve(&moment),
            None => {
                report.pinv_fallbacks += 1;
                gram.pseudo_inverse(1e-12)
                    .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?
                    * &moment
            }
        };
        let values: Vec<f64> = (0..live.len())
            .map(|i| coords.row(i).transpose().dot(&theta))
            .collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.live_actions = live
            .iter()
            .zip(&values)
            .filter(|(_, &v)| best - v <= 2.0 * accuracy)
            .map(|(&i, _)| i)
            .collect();
        state.estimate = Some((&basis * &theta).iter().copied().collect());
        report.phases.push(state);
        phase += 1;
    }
    Ok(report)
}

pub(crate) fn report_diagnostics(report: &PhaseReport) -> Diagnostics {
    let mut diag = Diagnostics::default();
    diag.insert("phases", report.phases.len());
    diag.insert("live_actions", report.live_actions.clone());
    diag.insert("pinv_fallbacks", report.pinv_fallbacks);
    diag
}

/// Phased elimination on the fixed action set of `bandit`, for its remaining rounds.
pub fn phased_elimination_on(
    bandit: &mut Bandit<'_>,
    delta: f64,
    rng: &mut RngStream,
) -> Result<PhaseReport> {
    let features = bandit
        .fixed_actions()
        .ok_or_else(|| Error::invalid("phased elimination needs a fixed action set"))?
        .matrix();
    let budget = bandit.remaining();
    phased_elimination_core(&features, budget, delta, |i| bandit.play(i, rng))
}

pub fn run_phased_elimination(
    actions: &ActionSet,
    instance: &SparseInstance,
    horizon: usize,
    delta: f64,
    rng: &mut RngStream,
) -> Result<PolicyOutcome> {
    let mut bandit = Bandit::fixed(instance, actions, horizon)?;
    let report = phased_elimination_on(&mut bandit, delta, rng)?;
    Ok(PolicyOutcome {
        trajectory: bandit.into_trajectory(),
        diagnostics: report_diagnostics(&report),
    })
}
