//! The alternative parameter of the lower-bound argument and the KL divergence
//! between the two induced reward laws.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use super::{binomial, pow2, subsets, HardInstanceSpec};
use crate::error::{Error, Result};
use crate::model::ActionSet;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy)]
pub struct AlternativeOptions {
    /// Largest `|𝒮′|` that is enumerated exhaustively.
    pub cap: usize,
    /// Candidates drawn uniformly from `𝒮′` when it exceeds `cap`.
    pub candidates: usize,
}

impl Default for AlternativeOptions {
    fn default() -> Self {
        Self {
            cap: 100_000,
            candidates: 100_000,
        }
    }
}

/// A member of `𝒮′`: positions within the free block and a sign bitmask (bit set = −1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    support: Vec<usize>,
    signs: u64,
}

/// `θ̃ = θ + 2ε·x̃`, where `x̃` minimizes `Σₓ Tₓ⟨x, x̃⟩²` over `𝒮′`.
///
/// `𝒮′` holds the `(s−1)`-sparse sign vectors supported on coordinates
/// `s,…,d−1` (1-based). `counts[i]` is the number of pulls (or expected pulls) of
/// action `i`. Ties go to the smallest candidate, ordering first by support
/// (lexicographically) and then by sign pattern with `+` before `−`.
pub fn alternative_theta(
    theta: &[f64],
    spec: &HardInstanceSpec,
    actions: &ActionSet,
    counts: &[f64],
    options: AlternativeOptions,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let (d, s) = (spec.d, spec.s);
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: theta.len(),
        });
    }
    actions.check_dim(d)?;
    if counts.len() != actions.len() {
        return Err(Error::DimensionMismatch {
            expected: actions.len(),
            actual: counts.len(),
        });
    }
    if d - 1 < 2 * (s - 1) {
        return Err(Error::invalid(format!(
            "the alternative set is empty unless d−1 ≥ 2(s−1) (d={d}, s={s})"
        )));
    }
    // free block: 0-based coordinates s−1 ..= d−2
    let offset = s - 1;
    let free = d - s;
    let k = s - 1;

    let mut gram = DMatrix::<f64>::zeros(free, free);
    for (x, &c) in actions.iter().zip(counts) {
        if c < 0.0 {
            return Err(Error::invalid("pull counts must be ≥ 0"));
        }
        if c > 0.0 {
            let block: DVector<f64> = x.coords().rows(offset, free).into_owned();
            gram.ger(c, &block, &block, 1.0);
        }
    }
    let objective = |c: &Candidate| {
        let sign = |b: usize| if c.signs >> b & 1 == 0 { 1.0 } else { -1.0 };
        let mut total = 0.0;
        for (a, &i) in c.support.iter().enumerate() {
            for (b, &j) in c.support.iter().enumerate() {
                total += sign(a) * sign(b) * gram[(i, j)];
            }
        }
        total
    };

    let population = binomial(free as u64, k as u64).saturating_mul(pow2(k as u64));
    let mut best: Option<(f64, Candidate)> = None;
    let mut consider = |c: Candidate| {
        let v = objective(&c);
        let better = match &best {
            None => true,
            Some((bv, bc)) => v < *bv || (v == *bv && c < *bc),
        };
        if better {
            best = Some((v, c));
        }
    };
    if population <= options.cap as u128 {
        for support in subsets(free, k) {
            for signs in 0..1u64 << k {
                consider(Candidate {
                    support: support.clone(),
                    signs,
                });
            }
        }
    } else {
        if options.candidates == 0 {
            return Err(Error::invalid("candidate count must be ≥ 1"));
        }
        for _ in 0..options.candidates {
            let mut support = index::sample(rng, free, k).into_vec();
            support.sort_unstable();
            consider(Candidate {
                support,
                signs: rng.next_bits(k),
            });
        }
    }
    let (_, chosen) = best.expect("𝒮′ is non-empty");

    let mut alt = theta.to_vec();
    for (b, &j) in chosen.support.iter().enumerate() {
        let sign = if chosen.signs >> b & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        alt[offset + j] += 2.0 * spec.epsilon * sign;
    }
    Ok(alt)
}

/// `(1/(2σ²)) Σₓ Tₓ⟨x, θ − θ̃⟩²`, the KL divergence between the laws of a run
/// under `θ` and `θ̃` when action `x` is pulled `Tₓ` times in expectation.
pub fn kl_between(
    theta: &[f64],
    theta_tilde: &[f64],
    actions: &ActionSet,
    counts: &[f64],
    noise_std: f64,
) -> Result<f64> {
    let d = actions.dim();
    for v in [theta, theta_tilde] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
    }
    if counts.len() != actions.len() {
        return Err(Error::DimensionMismatch {
            expected: actions.len(),
            actual: counts.len(),
        });
    }
    if counts.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::invalid("pull counts must be ≥ 0"));
    }
    if !(noise_std > 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!(
            "noise_std must be > 0, got {noise_std}"
        )));
    }
    let delta = DVector::from_iterator(d, theta.iter().zip(theta_tilde).map(|(a, b)| a - b));
    let total: f64 = actions
        .iter()
        .zip(counts)
        .map(|(x, &c)| {
            let p = x.dot(&delta);
            c * p * p
        })
        .sum();
    Ok(total / (2.0 * noise_std * noise_std))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        e
    }

    #[test]
    fn avoids_the_logged_coordinate() {
        // coordinate 2 (1-based) is the first free one when s = 2
        let spec = HardInstanceSpec::new(7, 2, 1.0, 0.1).unwrap();
        let actions = ActionSet::from_rows(vec![unit(7, 1)]).unwrap();
        let theta = spec.theta();
        let alt = alternative_theta(
            &theta,
            &spec,
            &actions,
            &[50.0],
            AlternativeOptions::default(),
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        let mut expected = theta.clone();
        expected[2] += 0.2;
        assert_eq!(alt, expected);
    }

    #[test]
    fn unlogged_run_takes_first_candidate() {
        let spec = HardInstanceSpec::new(9, 3, 1.0, 0.05).unwrap();
        let actions = ActionSet::from_rows(vec![unit(9, 0)]).unwrap();
        let theta = spec.theta();
        let alt = alternative_theta(
            &theta,
            &spec,
            &actions,
            &[0.0],
            AlternativeOptions::default(),
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        let mut expected = theta.clone();
        expected[2] += 0.1;
        expected[3] += 0.1;
        assert_eq!(alt, expected);
        assert!(alt.iter().filter(|v| **v != 0.0).count() < 2 * 3);
    }

    #[test]
    fn sampled_candidates_stay_in_the_free_block() {
        let spec = HardInstanceSpec::new(60, 6, 1.0, 0.1).unwrap();
        let actions = ActionSet::from_rows(vec![spec.optimal_action()]).unwrap();
        let theta = spec.theta();
        let options = AlternativeOptions {
            cap: 10,
            candidates: 50,
        };
        let alt = alternative_theta(
            &theta,
            &spec,
            &actions,
            &[3.0],
            options,
            &mut RngStream::new(1, 0),
        )
        .unwrap();
        let changed: Vec<usize> = (0..60).filter(|&j| alt[j] != theta[j]).collect();
        assert_eq!(changed.len(), 5);
        assert!(changed.iter().all(|&j| (5..59).contains(&j)));
    }

    #[test]
    fn needs_room_for_the_alternative() {
        let spec = HardInstanceSpec::new(5, 4, 1.0, 0.1).unwrap();
        let actions = ActionSet::from_rows(vec![unit(5, 0)]).unwrap();
        assert!(alternative_theta(
            &spec.theta(),
            &spec,
            &actions,
            &[1.0],
            AlternativeOptions::default(),
            &mut RngStream::new(0, 0)
        )
        .is_err());
    }

    #[test]
    fn kl_examples() {
        let actions = ActionSet::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let theta = [0.3, -0.2];
        assert_eq!(
            kl_between(&theta, &theta, &actions, &[4.0, 7.0], 1.0).unwrap(),
            0.0
        );
        let kl = kl_between(&[0.1, 0.0], &[0.0, 0.0], &actions, &[100.0, 0.0], 1.0).unwrap();
        assert!((kl - 0.5).abs() < 1e-12);
        // orthogonal shift is invisible
        let kl = kl_between(&[0.0, 0.0], &[0.0, 1.0], &actions, &[100.0, 0.0], 1.0).unwrap();
        assert_eq!(kl, 0.0);
        assert!(kl_between(&theta, &theta, &actions, &[-1.0, 0.0], 1.0).is_err());
    }
}
