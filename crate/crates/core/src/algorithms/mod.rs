//! Bandit policies.
//!
//! Each policy comes in two forms: a `*_on` function that drives an existing
//! [`Bandit`] (fixed or contextual, with optional informative labels), and a
//! `run_*` convenience wrapper that builds a fixed-action bandit and returns the
//! trajectory together with per-run diagnostics.

mod estc;
mod linucb;
mod phased;
mod rpe;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::model::{argmax, Bandit, RegretTrajectory};
use crate::rng::RngStream;

pub use estc::{estc_on, exploration_length, run_estc, EstcConfig, Exploration};
pub use linucb::{linucb_on, run_linucb, LinUcbConfig};
pub(crate) use phased::report_diagnostics as phase_diagnostics;
pub use phased::{phased_elimination_on, run_phased_elimination, PhaseReport, PhaseState};
pub use rpe::{restricted_pe_on, run_restricted_pe, RpeConfig};

/// Named scalar and list outputs of one policy run (exploration length, Lasso
/// residual, recovered support, ...), keyed for the harness diagnostics file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics(BTreeMap<String, serde_json::Value>);

impl Diagnostics {
    pub fn insert(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&serde_json::Value> {
        self.0.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &serde_json::Value)> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.0.extend(other.0);
    }
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub trajectory: RegretTrajectory,
    pub diagnostics: Diagnostics,
}

/// Plays `rounds` rounds with `choose` and returns the design matrix and rewards.
fn collect(
    bandit: &mut Bandit<'_>,
    rounds: usize,
    rng: &mut RngStream,
    mut choose: impl FnMut(&Bandit<'_>, &mut RngStream) -> usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = bandit.dim();
    let mut x = DMatrix::zeros(rounds, d);
    let mut y = Vec::with_capacity(rounds);
    for t in 0..rounds {
        let i = choose(bandit, rng);
        x.row_mut(t)
            .copy_from(&bandit.actions().actions()[i].coords().transpose());
        y.push(bandit.play(i, rng)?);
    }
    Ok((x, y))
}

/// Plays the greedy action `argmax_x ⟨θ̂, x⟩` until the horizon, recomputing it
/// only when the action set changes. Returns the committed index for fixed sets.
fn commit(
    bandit: &mut Bandit<'_>,
    estimate: &nalgebra::DVector<f64>,
    rng: &mut RngStream,
) -> Result<Option<usize>> {
    if let Some(set) = bandit.fixed_actions() {
        let (best, _) = argmax(&set.values(estimate)?);
        while !bandit.is_done() {
            bandit.play(best, rng)?;
        }
        return Ok(Some(best));
    }
    while !bandit.is_done() {
        let (best, _) = argmax(&bandit.actions().values(estimate)?);
        bandit.play(best, rng)?;
    }
    Ok(None)
}
