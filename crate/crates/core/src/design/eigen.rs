use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix with a unit eigenvector.
pub fn min_eigen(matrix: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    check_symmetric(matrix)?;
    if matrix.is_empty() {
        return Err(Error::invalid("empty matrix"));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let (i, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty spectrum");
    let v = eig.eigenvectors.column(i).normalize();
    Ok((value, v))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(matrix: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(matrix)?;
    Ok(matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}
