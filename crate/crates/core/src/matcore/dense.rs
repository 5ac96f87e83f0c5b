use nalgebra::linalg::SVD;

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Reciprocal condition below which a system is refused as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

fn singular_values(a: &Matrix) -> Vec<f64> {
    if a.is_real() {
        let svd = SVD::new(a.inner().map(|z| z.re), false, false);
        return svd.singular_values.iter().copied().collect();
    }
    let svd = SVD::new(a.inner().clone(), false, false);
    svd.singular_values.iter().copied().collect()
}

/// Spectral norm (largest singular value).
pub fn operator_norm(a: &Matrix) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    if a.cols() == 1 || a.rows() == 1 {
        return a.frobenius();
    }
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Ratio of smallest to largest singular value of a square matrix; zero for
/// the zero matrix.
pub fn reciprocal_condition(a: &Matrix) -> Result<f64> {
    a.ensure_square()?;
    if a.is_zero() {
        return Ok(0.0);
    }
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if max > 0.0 { min / max } else { 0.0 })
}

/// Solves `A X = rhs`, refusing matrices whose reciprocal condition is below
/// [`SINGULAR_RCOND`].
pub fn solve(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let n = a.ensure_square()?;
    if rhs.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "right-hand side of solve",
            expected: (n, rhs.cols()),
            got: rhs.shape(),
        });
    }
    let rcond = reciprocal_condition(a)?;
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::Singular { rcond });
    }
    let lu = a.inner().clone().lu();
    let x = lu.solve(rhs.inner()).ok_or(Error::Singular { rcond })?;
    Matrix::new(x).map_err(|_| Error::Singular { rcond })
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve(a, &Matrix::identity(a.ensure_square()?))
}
