//! Benchmark environments, the lower-bound construction and closed-form bounds.

mod alternative;
mod bounds;
mod contextual;
mod hard;
mod random;

pub use alternative::{alternative_theta, kl_between, AlternativeOptions};
pub use bounds::{estc_upper_bound, lower_bound, rpe_upper_bound};
pub use contextual::{contextual_instance, uniform_arm_c_min, ContextualArms, ContextualSpec};
pub use hard::{data_poor_epsilon, hard_instance, subsample_hard_instance, HardInstanceSpec};
pub use random::{basis_instance, random_instance, RandomSpec};

use crate::model::{ActionSet, InstanceDocument, SparseInstance};

/// A fixed action set with its parameter and informative-action labels.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub actions: ActionSet,
    pub instance: SparseInstance,
    /// `true` for actions in the informative set `ℋ`.
    pub informative: Vec<bool>,
}

impl GeneratedInstance {
    pub fn informative_indices(&self) -> Vec<usize> {
        self.informative
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn document(&self) -> InstanceDocument {
        InstanceDocument::new(&self.actions, Some(&self.instance))
            .with_informative(self.informative_indices())
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `2^e` saturating at `u128::MAX`.
pub(crate) fn pow2(e: u64) -> u128 {
    if e >= 128 {
        u128::MAX
    } else {
        1u128 << e
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        if idx[i] == i + n - k {
            return out;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
