//! Actions, environments, reward sampling and regret accounting.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Slack allowed on the `‖x‖_∞ ≤ 1` bound to absorb rounding in generated features.
const BOUND_SLACK: f64 = 1e-12;

/// A single arm: a feature vector with every coordinate in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    coords: DVector<f64>,
}

impl Action {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(coords: DVector<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("action has no coordinates"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        let sup = coords.amax();
        if sup > 1.0 + BOUND_SLACK {
            return Err(Error::invalid(format!("‖x‖_∞ = {sup} exceeds 1")));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, theta: &DVector<f64>) -> f64 {
        self.coords.dot(theta)
    }
}

/// A finite, duplicate-free collection of actions sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    dim: usize,
    actions: Vec<Action>,
}

impl ActionSet {
    pub fn new(actions: Vec<Action>) -> Result<Self> {
        let first = actions
            .first()
            .ok_or_else(|| Error::invalid("action set is empty"))?;
        let dim = first.dim();
        let mut seen = HashSet::with_capacity(actions.len());
        for (i, a) in actions.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: a.dim(),
                });
            }
            // -0.0 and 0.0 are the same coordinate.
            let key: Vec<u64> = a.coords.iter().map(|c| (c + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::invalid(format!("duplicate action at index {i}")));
            }
        }
        Ok(Self { dim, actions })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let actions = rows
            .into_iter()
            .map(Action::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(actions)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Action> {
        self.actions.get(index)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn iter(&self) -> impl Iterator<Item = &Action> {
        self.actions.iter()
    }

    /// The actions stacked as the rows of a `K × d` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.dim, |i, j| self.actions[i].coords[j])
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.actions
            .iter()
            .map(|a| a.coords.iter().copied().collect())
            .collect()
    }

    /// Expected rewards `⟨x, θ⟩` of every action.
    pub fn values(&self, theta: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_dim(theta.len())?;
        Ok(self.actions.iter().map(|a| a.dot(theta)).collect())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: dim,
            });
        }
        Ok(())
    }
}

/// The environment parameter: an `s`-sparse `θ` and the Gaussian noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseInstance {
    theta: DVector<f64>,
    sparsity_bound: usize,
    noise_std: f64,
}

impl SparseInstance {
    /// `noise_std = 0` is accepted and gives a noiseless environment.
    pub fn new(theta: Vec<f64>, sparsity_bound: usize, noise_std: f64) -> Result<Self> {
        let theta = DVector::from_vec(theta);
        if theta.is_empty() {
            return Err(Error::invalid("theta has no coordinates"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta has a non-finite coordinate"));
        }
        let nnz = theta.iter().filter(|t| **t != 0.0).count();
        if nnz > sparsity_bound {
            return Err(Error::invalid(format!(
                "‖θ‖₀ = {nnz} exceeds sparsity bound {sparsity_bound}"
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_std must be ≥ 0, got {noise_std}"
            )));
        }
        Ok(Self {
            theta,
            sparsity_bound,
            noise_std,
        })
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn sparsity_bound(&self) -> usize {
        self.sparsity_bound
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.theta[j] != 0.0).collect()
    }

    pub fn with_noise(mut self, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_std must be ≥ 0, got {noise_std}"
            )));
        }
        self.noise_std = noise_std;
        Ok(self)
    }
}

/// Index and value of `argmax_x ⟨x, θ⟩`; ties go to the lowest index.
pub fn optimal_action(instance: &SparseInstance, actions: &ActionSet) -> Result<(usize, f64)> {
    let values = actions.values(instance.theta())?;
    Ok(argmax(&values))
}

pub fn sample_reward(
    instance: &SparseInstance,
    action: &Action,
    rng: &mut RngStream,
) -> Result<f64> {
    if action.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            actual: action.dim(),
        });
    }
    let mean = action.dot(instance.theta());
    Ok(mean + instance.noise_std() * rng.standard_normal())
}

/// `Δ_x = ⟨x*, θ⟩ − ⟨x, θ⟩` for the action at `index`.
pub fn suboptimality_gap(
    instance: &SparseInstance,
    actions: &ActionSet,
    index: usize,
) -> Result<f64> {
    let action = actions
        .get(index)
        .ok_or_else(|| Error::invalid(format!("action index {index} out of range")))?;
    let (_, best) = optimal_action(instance, actions)?;
    Ok((best - action.dot(instance.theta())).max(0.0))
}

/// First index of the maximum; NaNs never win.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub round: usize,
    pub action: usize,
    pub reward: f64,
    pub regret: f64,
}

/// Per-round record of one run with its running regret.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrajectory {
    steps: Vec<Step>,
    cumulative: Vec<f64>,
    informative_pulls: usize,
}

impl RegretTrajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            steps: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n),
            informative_pulls: 0,
        }
    }

    /// Appends round `len() + 1`. Negative gaps are clamped to zero.
    pub fn push(&mut self, action: usize, reward: f64, gap: f64, informative: bool) {
        let regret = gap.max(0.0);
        let total = self.final_regret() + regret;
        self.steps.push(Step {
            round: self.steps.len() + 1,
            action,
            reward,
            regret,
        });
        self.cumulative.push(total);
        if informative {
            self.informative_pulls += 1;
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Number of rounds whose action was in the designated informative subset (`T_n(ℋ)`).
    pub fn informative_pulls(&self) -> usize {
        self.informative_pulls
    }

    pub fn played(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.action)
    }

    /// Pull counts per action index, for a set of `k` actions.
    pub fn pull_counts(&self, k: usize) -> Vec<usize> {
        let mut counts = vec![0; k];
        for s in &self.steps {
            counts[s.action] += 1;
        }
        counts
    }
}

/// Generator of fresh action sets, one per round.
pub trait ContextSource: Send {
    fn dim(&self) -> usize;
    fn num_arms(&self) -> usize;
    fn next_set(&mut self) -> ActionSet;
}

enum Arms<'a> {
    Fixed {
        set: &'a ActionSet,
        values: Vec<f64>,
        best: f64,
        informative: Option<&'a [bool]>,
    },
    Contextual {
        source: Box<dyn ContextSource + 'a>,
        current: ActionSet,
        values: Vec<f64>,
        best: f64,
    },
}

/// The interaction loop seen by a policy: offers the current action set,
/// samples rewards and keeps the regret ledger.
pub struct Bandit<'a> {
    instance: &'a SparseInstance,
    arms: Arms<'a>,
    horizon: usize,
    trajectory: RegretTrajectory,
}

impl<'a> Bandit<'a> {
    pub fn fixed(
        instance: &'a SparseInstance,
        actions: &'a ActionSet,
        horizon: usize,
    ) -> Result<Self> {
        let values = actions.values(instance.theta())?;
        let best = argmax(&values).1;
        Ok(Self {
            instance,
            arms: Arms::Fixed {
                set: actions,
                values,
                best,
                informative: None,
            },
            horizon,
            trajectory: RegretTrajectory::with_capacity(horizon),
        })
    }

    pub fn contextual(
        instance: &'a SparseInstance,
        mut source: Box<dyn ContextSource + 'a>,
        horizon: usize,
    ) -> Result<Self> {
        if source.dim() != instance.dim() {
            return Err(Error::DimensionMismatch {
                expected: instance.dim(),
                actual: source.dim(),
            });
        }
        let current = source.next_set();
        let values = current.values(instance.theta())?;
        let best = argmax(&values).1;
        Ok(Self {
            instance,
            arms: Arms::Contextual {
                source,
                current,
                values,
                best,
            },
            horizon,
            trajectory: RegretTrajectory::with_capacity(horizon),
        })
    }

    /// Marks which fixed actions count toward `informative_pulls`.
    pub fn with_informative(mut self, mask: &'a [bool]) -> Self {
        if let Arms::Fixed { informative, .. } = &mut self.arms {
            *informative = Some(mask);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.instance.dim()
    }

    pub fn instance(&self) -> &'a SparseInstance {
        self.instance
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn played(&self) -> usize {
        self.trajectory.len()
    }

    pub fn remaining(&self) -> usize {
        self.horizon - self.trajectory.len()
    }

    pub fn is_done(&self) -> bool {
        self.remaining() == 0
    }

    /// Action set offered in the upcoming round.
    pub fn actions(&self) -> &ActionSet {
        match &self.arms {
            Arms::Fixed { set, .. } => set,
            Arms::Contextual { current, .. } => current,
        }
    }

    /// The fixed action set, or `None` when actions change every round.
    pub fn fixed_actions(&self) -> Option<&'a ActionSet> {
        match &self.arms {
            Arms::Fixed { set, .. } => Some(set),
            Arms::Contextual { .. } => None,
        }
    }

    /// Plays `index` in the current round and returns the observed reward.
    pub fn play(&mut self, index: usize, rng: &mut RngStream) -> Result<f64> {
        if self.is_done() {
            return Err(Error::invalid("horizon exhausted"));
        }
        let set = self.actions();
        let action = set
            .get(index)
            .ok_or_else(|| Error::invalid(format!("action index {index} out of range")))?;
        let reward = sample_reward(self.instance, action, rng)?;
        match &mut self.arms {
            Arms::Fixed {
                values,
                best,
                informative,
                ..
            } => {
                let flag = informative.map(|m| m[index]).unwrap_or(false);
                self.trajectory
                    .push(index, reward, *best - values[index], flag);
            }
            Arms::Contextual {
                source,
                current,
                values,
                best,
            } => {
                self.trajectory
                    .push(index, reward, *best - values[index], false);
                if self.trajectory.len() < self.horizon {
                    *current = source.next_set();
                    *values = current.values(self.instance.theta())?;
                    *best = argmax(values).1;
                }
            }
        }
        Ok(reward)
    }

    pub fn trajectory(&self) -> &RegretTrajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> RegretTrajectory {
        self.trajectory
    }
}

/// JSON form shared by action sets, instances and generated environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub dim: usize,
    pub actions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity_bound: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub informative: Vec<usize>,
}

fn default_noise() -> f64 {
    1.0
}

impl InstanceDocument {
    pub fn new(actions: &ActionSet, instance: Option<&SparseInstance>) -> Self {
        Self {
            dim: actions.dim(),
            actions: actions.rows(),
            theta: instance.map(|i| i.theta().iter().copied().collect()),
            sparsity_bound: instance.map(|i| i.sparsity_bound()),
            noise_std: instance.map(|i| i.noise_std()).unwrap_or(1.0),
            labels: None,
        }
    }

    pub fn with_informative(mut self, informative: Vec<usize>) -> Self {
        self.labels = Some(Labels { informative });
        self
    }

    pub fn action_set(&self) -> Result<ActionSet> {
        let set = ActionSet::from_rows(self.actions.clone())?;
        set.check_dim(self.dim)?;
        Ok(set)
    }

    /// The instance, when `theta` is present. `sparsity_bound` defaults to `‖θ‖₀`.
    pub fn instance(&self) -> Result<Option<SparseInstance>> {
        let Some(theta) = &self.theta else {
            return Ok(None);
        };
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: theta.len(),
            });
        }
        let s = self
            .sparsity_bound
            .unwrap_or_else(|| theta.iter().filter(|t| **t != 0.0).count());
        SparseInstance::new(theta.clone(), s, self.noise_std).map(Some)
    }

    /// Boolean mask over actions from the `informative` label list.
    pub fn informative_mask(&self) -> Result<Option<Vec<bool>>> {
        let Some(labels) = &self.labels else {
            return Ok(None);
        };
        let mut mask = vec![false; self.actions.len()];
        for &i in &labels.informative {
            *mask
                .get_mut(i)
                .ok_or_else(|| Error::invalid(format!("label index {i} out of range")))? = true;
        }
        Ok(Some(mask))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize) -> ActionSet {
        ActionSet::from_rows(
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn optimal_action_identity() {
        let inst = SparseInstance::new(vec![1.0, 0.0], 1, 1.0).unwrap();
        assert_eq!(optimal_action(&inst, &basis(2)).unwrap(), (0, 1.0));
    }

    #[test]
    fn optimal_action_all_ties_picks_first() {
        let inst = SparseInstance::new(vec![0.0; 3], 1, 1.0).unwrap();
        assert_eq!(optimal_action(&inst, &basis(3)).unwrap(), (0, 0.0));
        for i in 0..3 {
            assert_eq!(suboptimality_gap(&inst, &basis(3), i).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = SparseInstance::new(vec![1.0, 0.0, 0.0], 1, 1.0).unwrap();
        assert!(matches!(
            optimal_action(&inst, &basis(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        let a = Action::new(vec![1.0, 0.0]).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert!(sample_reward(&inst, &a, &mut rng).is_err());
    }

    #[test]
    fn gap_of_optimum_is_zero() {
        let inst = SparseInstance::new(vec![0.3, -0.2], 2, 1.0).unwrap();
        let set = basis(2);
        assert_eq!(suboptimality_gap(&inst, &set, 0).unwrap(), 0.0);
        assert!((suboptimality_gap(&inst, &set, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(suboptimality_gap(&inst, &set, 2).is_err());
    }

    #[test]
    fn noiseless_reward_is_exact() {
        let inst = SparseInstance::new(vec![0.25, -0.5], 2, 0.0).unwrap();
        let a = Action::new(vec![1.0, 0.5]).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_reward(&inst, &a, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn action_set_invariants() {
        assert!(ActionSet::from_rows(vec![]).is_err());
        assert!(ActionSet::from_rows(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
        assert!(ActionSet::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(ActionSet::from_rows(vec![vec![1.5, 0.0]]).is_err());
        assert!(ActionSet::from_rows(vec![vec![0.0, 0.0], vec![-0.0, 0.0]]).is_err());
    }

    #[test]
    fn instance_sparsity_is_enforced() {
        assert!(SparseInstance::new(vec![1.0, 1.0, 0.0], 1, 1.0).is_err());
        assert!(SparseInstance::new(vec![1.0, 0.0], 1, -1.0).is_err());
    }

    #[test]
    fn trajectory_accumulates() {
        let mut t = RegretTrajectory::default();
        t.push(0, 1.0, 0.5, false);
        t.push(1, 0.0, 0.0, true);
        t.push(0, 1.0, 0.25, true);
        assert_eq!(t.cumulative(), &[0.5, 0.5, 0.75]);
        assert_eq!(t.informative_pulls(), 2);
        assert_eq!(t.steps()[2].round, 3);
        assert_eq!(t.pull_counts(2), vec![2, 1]);
    }

    #[test]
    fn document_round_trip() {
        let set = basis(2);
        let inst = SparseInstance::new(vec![1.0, 0.0], 1, 0.5).unwrap();
        let doc = InstanceDocument::new(&set, Some(&inst)).with_informative(vec![1]);
        let json = serde_json::to_string(&doc).unwrap();
        let back: InstanceDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.action_set().unwrap(), set);
        assert_eq!(back.instance().unwrap().unwrap(), inst);
        assert_eq!(back.informative_mask().unwrap().unwrap(), vec![false, true]);
    }
}
