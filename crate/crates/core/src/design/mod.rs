//! Exploration designs over a finite action set.
//!
//! [`solve_e_optimal`] maximizes the minimum eigenvalue of `E_{A∼μ}[AAᵀ]`, the
//! quantity whose optimum is `C_min(𝒜)`. [`solve_g_optimal`] minimizes the
//! maximum leverage `xᵀV(μ)⁻¹x`, used by phased elimination.

mod e_optimal;
mod eigen;
mod g_optimal;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ActionSet;
use crate::rng::RngStream;

pub use e_optimal::{c_min, solve_e_optimal, EOptimalOptions};
pub use eigen::{max_eigenvalue, min_eigen};
pub(crate) use g_optimal::g_optimal_weights;
pub use g_optimal::solve_g_optimal;

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// A finitely supported probability measure over action indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDistribution {
    pub dim: usize,
    atoms: Vec<(usize, f64)>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl DesignDistribution {
    pub fn new(atoms: Vec<(usize, f64)>, dim: usize) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("design has no atoms"));
        }
        if atoms.iter().any(|&(_, w)| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("design weights must be finite and ≥ 0"));
        }
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "design weights sum to {total}, not 1"
            )));
        }
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|&(_, w)| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            dim,
            atoms,
            cumulative,
        })
    }

    /// Builds a design from dense weights, dropping zeros and renormalizing away rounding.
    pub fn from_weights(weights: &[f64], dim: usize) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        let atoms: Vec<(usize, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i, w / total))
            .collect();
        Self::new(atoms, dim)
    }

    pub fn uniform(indices: &[usize], dim: usize) -> Result<Self> {
        let w = 1.0 / indices.len() as f64;
        let mut atoms: Vec<(usize, f64)> = indices.iter().map(|&i| (i, w)).collect();
        // absorb rounding so the weights sum to 1 within 1e-12
        let drift: f64 = 1.0 - atoms.iter().map(|a| a.1).sum::<f64>();
        if let Some(last) = atoms.last_mut() {
            last.1 += drift;
        }
        Self::new(atoms, dim)
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.0 == index)
            .map(|a| a.1)
            .sum()
    }

    pub fn validate_for(&self, actions: &ActionSet) -> Result<()> {
        actions.check_dim(self.dim)?;
        if let Some(&(i, _)) = self.atoms.iter().find(|a| a.0 >= actions.len()) {
            return Err(Error::invalid(format!(
                "design atom {i} out of range for {} actions",
                actions.len()
            )));
        }
        Ok(())
    }

    /// Draws one action index.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let cumulative = if self.cumulative.len() == self.atoms.len() {
            std::borrow::Cow::Borrowed(&self.cumulative)
        } else {
            // deserialized designs skip the cache
            let mut acc = 0.0;
            std::borrow::Cow::Owned(
                self.atoms
                    .iter()
                    .map(|a| {
                        acc += a.1;
                        acc
                    })
                    .collect::<Vec<_>>(),
            )
        };
        let u = rng.uniform() * cumulative.last().copied().unwrap_or(1.0);
        let pos = cumulative.partition_point(|&c| c <= u);
        self.atoms[pos.min(self.atoms.len() - 1)].0
    }
}

/// Convergence evidence for a design solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    /// `σ_min(Σ)` for E-optimal designs, maximum leverage for G-optimal ones.
    pub objective: f64,
    /// Upper bound on the distance to the optimum.
    pub fw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `Σ = Σᵢ wᵢ xᵢxᵢᵀ`.
pub fn covariance(design: &DesignDistribution, actions: &ActionSet) -> Result<DMatrix<f64>> {
    design.validate_for(actions)?;
    let d = actions.dim();
    let mut sigma = DMatrix::zeros(d, d);
    for &(i, w) in design.atoms() {
        let x = actions.actions()[i].coords();
        sigma.ger(w, x, x, 1.0);
    }
    Ok(sigma)
}

pub(crate) fn weighted_gram(points: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let d = points.ncols();
    let mut sigma = DMatrix::zeros(d, d);
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            let x: DVector<f64> = points.row(i).transpose();
            sigma.ger(w, &x, &x, 1.0);
        }
    }
    sigma
}

/// Greedy pivoted selection of `rank` rows spanning the row space of `points`.
pub(crate) fn spanning_subset(points: &DMatrix<f64>) -> Vec<usize> {
    let (k, d) = points.shape();
    let mut residual: Vec<f64> = (0..k).map(|i| points.row(i).norm_squared()).collect();
    let scale = residual.iter().copied().fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut chosen = Vec::with_capacity(d);
    while chosen.len() < d {
        let (pick, best) = residual
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if best <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut q: DVector<f64> = points.row(pick).transpose();
        for b in &basis {
            let c = b.dot(&q);
            q.axpy(-c, b, 1.0);
        }
        // second pass against cancellation
        for b in &basis {
            let c = b.dot(&q);
            q.axpy(-c, b, 1.0);
        }
        let q = q.normalize();
        for (i, r) in residual.iter_mut().enumerate() {
            let c = points.row(i).transpose().dot(&q);
            *r = (*r - c * c).max(0.0);
        }
        residual[pick] = 0.0;
        chosen.push(pick);
        basis.push(q);
    }
    chosen
}

pub(crate) fn require_spanning(points: &DMatrix<f64>) -> Result<Vec<usize>> {
    let subset = spanning_subset(points);
    if subset.len() < points.ncols() {
        return Err(Error::NotSpanning {
            dim: points.ncols(),
            rank: subset.len(),
        });
    }
    Ok(subset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corners(d: usize) -> ActionSet {
        let rows = (0..1usize << d)
            .map(|m| {
                (0..d)
                    .map(|j| if m >> j & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        ActionSet::from_rows(rows).unwrap()
    }

    #[test]
    fn covariance_of_uniform_basis() {
        let d = 4;
        let set = ActionSet::from_rows(
            (0..d)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
        .unwrap();
        let design = DesignDistribution::uniform(&[0, 1, 2, 3], d).unwrap();
        let sigma = covariance(&design, &set).unwrap();
        assert!((sigma - DMatrix::<f64>::identity(d, d) / d as f64).amax() < 1e-15);
    }

    #[test]
    fn covariance_of_square_corners_is_identity() {
        let set = corners(2);
        let design = DesignDistribution::uniform(&[0, 1, 2, 3], 2).unwrap();
        let sigma = covariance(&design, &set).unwrap();
        assert!((sigma - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn covariance_point_mass() {
        let set = ActionSet::from_rows(vec![vec![0.5]]).unwrap();
        let design = DesignDistribution::new(vec![(0, 1.0)], 1).unwrap();
        let sigma = covariance(&design, &set).unwrap();
        assert_eq!(sigma[(0, 0)], 0.25);
    }

    #[test]
    fn design_validation() {
        assert!(DesignDistribution::new(vec![(0, 0.5), (1, 0.4)], 2).is_err());
        assert!(DesignDistribution::new(vec![(0, 1.5), (1, -0.5)], 2).is_err());
        let set = corners(2);
        let bad = DesignDistribution::new(vec![(9, 1.0)], 2).unwrap();
        assert!(covariance(&bad, &set).is_err());
    }

    #[test]
    fn sampling_follows_weights() {
        let design = DesignDistribution::new(vec![(3, 0.25), (7, 0.75)], 2).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 40_000;
        let hits = (0..n).filter(|_| design.sample(&mut rng) == 7).count();
        let p = hits as f64 / n as f64;
        // 3σ for a Bernoulli(0.75) mean over 40k draws
        assert!((p - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }

    #[test]
    fn spanning_subset_detects_rank() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(spanning_subset(&m).len(), 2);
        assert!(matches!(
            require_spanning(&m),
            Err(Error::NotSpanning { dim: 3, rank: 2 })
        ));
    }
}
