//! The two-block construction used by the minimax lower bound.
//!
//! `𝒮` holds the `(s−1)`-sparse sign vectors on the first `d−1` coordinates,
//! `ℋ = {±κ}^{d−1} × {1}` holds the informative actions, and
//! `θ = (ε,…,ε, 0,…,0, −1)` with `s−1` leading `ε`s. Every action in `ℋ` costs at
//! least `1 + (s−1)ε(1−κ)`, while `𝒮` alone cannot identify the support.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{binomial, pow2, subsets, GeneratedInstance};
use crate::error::{Error, Result};
use crate::model::{ActionSet, SparseInstance};
use crate::rng::RngStream;

pub const DEFAULT_CAP: usize = 1_000_000;
pub const DEFAULT_N_INFORMATIVE: usize = 500;
pub const DEFAULT_N_LOW_REGRET: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    pub d: usize,
    pub s: usize,
    pub kappa: f64,
    pub epsilon: f64,
    /// Sample size drawn from `ℋ` by [`subsample_hard_instance`].
    #[serde(default)]
    pub n_informative: Option<usize>,
    /// Sample size drawn from `𝒮` by [`subsample_hard_instance`].
    #[serde(default)]
    pub n_low_regret: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    /// Largest `|𝒮| + |ℋ|` that [`hard_instance`] will enumerate.
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_noise() -> f64 {
    1.0
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

/// `κ^{−2/3} s^{−2/3} n^{−1/3}`, the gap that balances the two terms of the lower bound.
pub fn data_poor_epsilon(kappa: f64, s: usize, n: usize) -> f64 {
    kappa.powf(-2.0 / 3.0) * (s as f64).powf(-2.0 / 3.0) * (n as f64).powf(-1.0 / 3.0)
}

impl HardInstanceSpec {
    pub fn new(d: usize, s: usize, kappa: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            d,
            s,
            kappa,
            epsilon,
            n_informative: None,
            n_low_regret: None,
            noise_std: 1.0,
            cap: DEFAULT_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_subsample(mut self, n_informative: usize, n_low_regret: usize) -> Self {
        self.n_informative = Some(n_informative);
        self.n_low_regret = Some(n_low_regret);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 2 || self.s + 1 > self.d {
            return Err(Error::invalid(format!(
                "hard instance needs 2 ≤ s ≤ d−1 (d={}, s={})",
                self.d, self.s
            )));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_std must be ≥ 0, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }

    /// `|𝒮| = C(d−1, s−1)·2^{s−1}`.
    pub fn low_regret_count(&self) -> u128 {
        binomial(self.d as u64 - 1, self.s as u64 - 1).saturating_mul(pow2(self.s as u64 - 1))
    }

    /// `|ℋ| = 2^{d−1}`.
    pub fn informative_count(&self) -> u128 {
        pow2(self.d as u64 - 1)
    }

    pub fn theta(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.d];
        theta[..self.s - 1].fill(self.epsilon);
        theta[self.d - 1] = -1.0;
        theta
    }

    pub fn instance(&self) -> Result<SparseInstance> {
        SparseInstance::new(self.theta(), self.s, self.noise_std)
    }

    /// `x* = (1,…,1, 0,…,0)` with `s−1` ones.
    pub fn optimal_action(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        x[..self.s - 1].fill(1.0);
        x
    }

    fn low_regret_action(&self, support: &[usize], signs: u64) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        for (b, &j) in support.iter().enumerate() {
            x[j] = if signs >> b & 1 == 0 { 1.0 } else { -1.0 };
        }
        x
    }

    fn informative_action(&self, signs: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.d - 1)
            .map(|j| if signs(j) { -self.kappa } else { self.kappa })
            .collect();
        x.push(1.0);
        x
    }

    /// Whether `x` lies in `𝒮`.
    pub fn is_low_regret(&self, x: &[f64]) -> bool {
        x.len() == self.d
            && x[self.d - 1] == 0.0
            && x[..self.d - 1].iter().all(|&v| v == 0.0 || v.abs() == 1.0)
            && x.iter().filter(|v| **v != 0.0).count() == self.s - 1
    }

    /// Whether `x` lies in `ℋ`.
    pub fn is_informative(&self, x: &[f64]) -> bool {
        x.len() == self.d
            && x[self.d - 1] == 1.0
            && x[..self.d - 1].iter().all(|&v| v.abs() == self.kappa)
    }
}

/// Full enumeration: `𝒮` first (with `x*` at index 0), then `ℋ`.
pub fn hard_instance(spec: &HardInstanceSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let requested = spec
        .low_regret_count()
        .saturating_add(spec.informative_count());
    if requested > spec.cap as u128 {
        return Err(Error::CapExceeded {
            requested,
            cap: spec.cap,
        });
    }
    let mut rows = Vec::with_capacity(requested as usize);
    for support in subsets(spec.d - 1, spec.s - 1) {
        for signs in 0..1u64 << (spec.s - 1) {
            rows.push(spec.low_regret_action(&support, signs));
        }
    }
    let n_low = rows.len();
    for m in 0..1u64 << (spec.d - 1) {
        rows.push(spec.informative_action(|j| m >> j & 1 == 1));
    }
    let informative = (0..rows.len()).map(|i| i >= n_low).collect();
    Ok(GeneratedInstance {
        actions: ActionSet::from_rows(rows)?,
        instance: spec.instance()?,
        informative,
    })
}

/// Draws `count` distinct elements out of a population of `total`.
///
/// Dense requests enumerate the population and sample indices; sparse ones
/// draw at random and reject duplicates.
fn sample_distinct(
    total: u128,
    count: usize,
    cap: usize,
    rng: &mut RngStream,
    exclude: Option<&Vec<f64>>,
    enumerate: impl Fn() -> Vec<Vec<f64>>,
    draw: impl Fn(&mut RngStream) -> Vec<f64>,
) -> Result<Vec<Vec<f64>>> {
    let available = total - exclude.is_some() as u128;
    if count as u128 > available {
        return Err(Error::invalid(format!(
            "requested {count} actions from a set with {available} available"
        )));
    }
    if count as u128 * 2 > available {
        if total > cap as u128 {
            return Err(Error::CapExceeded {
                requested: total,
                cap,
            });
        }
        let pool: Vec<Vec<f64>> = enumerate()
            .into_iter()
            .filter(|x| Some(x) != exclude)
            .collect();
        return Ok(index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect());
    }
    let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(count + 1);
    if let Some(x) = exclude {
        seen.insert(key(x));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = draw(rng);
        if seen.insert(key(&x)) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Uniform without-replacement samples of `ℋ` and `𝒮`, with `x*` always kept.
///
/// The combined set is shuffled so the position of `x*` carries no information.
pub fn subsample_hard_instance(
    spec: &HardInstanceSpec,
    rng: &mut RngStream,
) -> Result<GeneratedInstance> {
    spec.validate()?;
    let n_h = spec.n_informative.unwrap_or(DEFAULT_N_INFORMATIVE);
    let n_s = spec.n_low_regret.unwrap_or(DEFAULT_N_LOW_REGRET);
    if n_s == 0 {
        return Err(Error::invalid(
            "the low-regret sample must contain at least x*",
        ));
    }
    let x_star = spec.optimal_action();
    let low = sample_distinct(
        spec.low_regret_count(),
        n_s - 1,
        spec.cap,
        rng,
        Some(&x_star),
        || {
            let mut rows = Vec::new();
            for support in subsets(spec.d - 1, spec.s - 1) {
                for signs in 0..1u64 << (spec.s - 1) {
                    rows.push(spec.low_regret_action(&support, signs));
                }
            }
            rows
        },
        |rng| {
            let mut support = index::sample(rng, spec.d - 1, spec.s - 1).into_vec();
            support.sort_unstable();
            let signs = rng.next_bits(spec.s - 1);
            spec.low_regret_action(&support, signs)
        },
    )?;
    let high = sample_distinct(
        spec.informative_count(),
        n_h,
        spec.cap,
        rng,
        None,
        || {
            (0..1u64 << (spec.d - 1))
                .map(|m| spec.informative_action(|j| m >> j & 1 == 1))
                .collect()
        },
        |rng| {
            let signs: Vec<bool> = (0..spec.d - 1).map(|_| rng.sign() < 0.0).collect();
            spec.informative_action(|j| signs[j])
        },
    )?;

    let mut labelled: Vec<(Vec<f64>, bool)> = std::iter::once((x_star, false))
        .chain(low.into_iter().map(|x| (x, false)))
        .chain(high.into_iter().map(|x| (x, true)))
        .collect();
    labelled.shuffle(rng);
    let (rows, informative): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();
    Ok(GeneratedInstance {
        actions: ActionSet::from_rows(rows)?,
        instance: spec.instance()?,
        informative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::optimal_action;

    #[test]
    fn smallest_instance_by_hand() {
        let spec = HardInstanceSpec::new(3, 2, 1.0, 0.1).unwrap();
        let g = hard_instance(&spec).unwrap();
        assert_eq!(
            g.actions.rows(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![-1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![1.0, 1.0, 1.0],
                vec![-1.0, 1.0, 1.0],
                vec![1.0, -1.0, 1.0],
                vec![-1.0, -1.0, 1.0],
            ]
        );
        assert_eq!(g.instance.theta().as_slice(), &[0.1, 0.0, -1.0]);
        assert_eq!(
            g.informative,
            vec![false, false, false, false, true, true, true, true]
        );
        assert_eq!(optimal_action(&g.instance, &g.actions).unwrap().0, 0);
    }

    #[test]
    fn counts_and_cap() {
        let spec = HardInstanceSpec::new(10, 3, 0.5, 0.1).unwrap();
        assert_eq!(spec.low_regret_count(), 36 * 4);
        assert_eq!(spec.informative_count(), 512);
        let g = hard_instance(&spec).unwrap();
        assert_eq!(g.actions.len(), 144 + 512);
        assert_eq!(g.informative.iter().filter(|f| **f).count(), 512);

        let big = HardInstanceSpec::new(40, 5, 1.0, 0.1).unwrap();
        assert!(matches!(
            hard_instance(&big),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(HardInstanceSpec::new(5, 1, 1.0, 0.1).is_err());
        assert!(HardInstanceSpec::new(5, 5, 1.0, 0.1).is_err());
        assert!(HardInstanceSpec::new(5, 2, 1.5, 0.1).is_err());
        assert!(HardInstanceSpec::new(5, 2, 0.0, 0.1).is_err());
        assert!(HardInstanceSpec::new(5, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn epsilon_tuning() {
        let e = data_poor_epsilon(1.0, 8, 1000);
        assert!((e - 0.025).abs() < 1e-12);
    }

    #[test]
    fn subsample_sizes_and_membership() {
        let spec = HardInstanceSpec::new(100, 5, 1.0, 0.05)
            .unwrap()
            .with_subsample(500, 200);
        let mut rng = RngStream::new(3, 2);
        let g = subsample_hard_instance(&spec, &mut rng).unwrap();
        assert_eq!(g.actions.len(), 700);
        assert_eq!(g.informative.iter().filter(|f| **f).count(), 500);
        for (x, &inf) in g.actions.rows().iter().zip(&g.informative) {
            if inf {
                assert!(spec.is_informative(x));
            } else {
                assert!(spec.is_low_regret(x));
            }
        }
        let (best, value) = optimal_action(&g.instance, &g.actions).unwrap();
        assert_eq!(g.actions.rows()[best], spec.optimal_action());
        assert!((value - 4.0 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn full_subsample_matches_enumeration() {
        let spec = HardInstanceSpec::new(5, 2, 0.5, 0.2).unwrap();
        let full = hard_instance(&spec).unwrap();
        let n_s = spec.low_regret_count() as usize;
        let n_h = spec.informative_count() as usize;
        let spec = spec.with_subsample(n_h, n_s);
        let sub = subsample_hard_instance(&spec, &mut RngStream::new(9, 2)).unwrap();
        let mut a = full.actions.rows();
        let mut b = sub.actions.rows();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a, b);
        let too_many = spec.with_subsample(n_h + 1, n_s);
        assert!(subsample_hard_instance(&too_many, &mut RngStream::new(9, 2)).is_err());
    }

    #[test]
    fn subsampling_is_reproducible() {
        let spec = HardInstanceSpec::new(30, 4, 1.0, 0.1)
            .unwrap()
            .with_subsample(50, 20);
        let a = subsample_hard_instance(&spec, &mut RngStream::new(5, 2)).unwrap();
        let b = subsample_hard_instance(&spec, &mut RngStream::new(5, 2)).unwrap();
        assert_eq!(a.actions, b.actions);
        assert_eq!(a.informative, b.informative);
    }
}
