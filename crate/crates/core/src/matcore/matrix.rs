use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, the carrier for every operator in the crate.
///
/// Entries are always finite and both dimensions are at least one. Real
/// matrices are stored with exactly zero imaginary parts, and complex
/// arithmetic on such data keeps the imaginary parts exactly zero.
#[derive(Clone, PartialEq)]
pub struct Matrix(DMatrix<C64>);

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} ", self.rows(), self.cols())?;
        if self.is_real() {
            f.debug_list().entries(self.to_real_rows().iter()).finish()
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Matrix {
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::Empty {
                rows: inner.nrows(),
                cols: inner.ncols(),
            });
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self(inner))
    }

    /// Wraps without validation; callers guarantee the invariants.
    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Self(inner)
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        for r in rows {
            if r.as_ref().len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "ragged row list",
                    expected: (nrows, ncols),
                    got: (nrows, r.as_ref().len()),
                });
            }
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| {
            C64::new(rows[i].as_ref()[j], 0.0)
        }))
    }

    pub fn from_complex_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        for r in rows {
            if r.as_ref().len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "ragged row list",
                    expected: (nrows, ncols),
                    got: (nrows, r.as_ref().len()),
                });
            }
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i].as_ref()[j]))
    }

    /// Row-major real data.
    pub fn from_real_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "row-major data length",
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        Self::new(DMatrix::from_fn(rows, cols, |i, j| {
            C64::new(data[i * cols + j], 0.0)
        }))
    }

    pub fn scalar(value: f64) -> Self {
        Self::from_inner(DMatrix::from_element(1, 1, C64::new(value, 0.0)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_inner(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_inner(DMatrix::identity(n, n))
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_inner(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn complex_diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_inner(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                values[i]
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Column vector from real data.
    pub fn column(values: &[f64]) -> Self {
        Self::from_inner(DMatrix::from_fn(values.len(), 1, |i, _| {
            C64::new(values[i], 0.0)
        }))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::new(DMatrix::from_fn(rows, cols, f))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn re(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)].re
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    /// Zeroes imaginary parts smaller than `tol` times the largest modulus.
    pub fn clean_imaginary(mut self, tol: f64) -> Self {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if self.0.iter().all(|z| z.im.abs() <= tol * scale) {
            self.0.iter_mut().for_each(|z| z.im = 0.0);
        }
        self
    }

    pub fn to_real_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)].re).collect())
            .collect()
    }

    /// Real parts of a column vector (or of the first column).
    pub fn real_column(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.0[(i, 0)].re).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_inner(self.0.transpose())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_inner(self.0.adjoint())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_inner(&self.0 * C64::new(factor, 0.0))
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self::from_inner(&self.0 * factor)
    }

    /// `self + shift * I`.
    pub fn shift(&self, shift: f64) -> Self {
        let mut out = self.0.clone();
        let n = out.nrows().min(out.ncols());
        for i in 0..n {
            out[(i, i)] += C64::new(shift, 0.0);
        }
        Self::from_inner(out)
    }

    pub fn block(&self, row: usize, col: usize, nrows: usize, ncols: usize) -> Self {
        Self::from_inner(self.0.view((row, col), (nrows, ncols)).into_owned())
    }

    pub fn set_block(&mut self, row: usize, col: usize, src: &Matrix) {
        self.0.view_mut((row, col), src.shape()).copy_from(&src.0);
    }

    /// Assembles `[[a, b], [c, d]]`, validating the four shapes.
    pub fn block2x2(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<Self> {
        let (n, m) = (a.rows(), d.rows());
        let check = |ctx: &'static str, got: (usize, usize), expected: (usize, usize)| {
            if got == expected {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context: ctx,
                    expected,
                    got,
                })
            }
        };
        check("upper-left block", a.shape(), (n, n))?;
        check("upper-right block", b.shape(), (n, m))?;
        check("lower-left block", c.shape(), (m, n))?;
        check("lower-right block", d.shape(), (m, m))?;
        let mut out = Matrix::zeros(n + m, n + m);
        out.set_block(0, 0, a);
        out.set_block(0, n, b);
        out.set_block(n, 0, c);
        out.set_block(n, n, d);
        Ok(out)
    }

    pub fn hstack(left: &Matrix, right: &Matrix) -> Result<Self> {
        if left.rows() != right.rows() {
            return Err(Error::DimensionMismatch {
                context: "hstack row counts",
                expected: (left.rows(), right.cols()),
                got: right.shape(),
            });
        }
        let mut out = Matrix::zeros(left.rows(), left.cols() + right.cols());
        out.set_block(0, 0, left);
        out.set_block(0, left.cols(), right);
        Ok(out)
    }

    pub fn vstack(top: &Matrix, bottom: &Matrix) -> Result<Self> {
        if top.cols() != bottom.cols() {
            return Err(Error::DimensionMismatch {
                context: "vstack column counts",
                expected: (bottom.rows(), top.cols()),
                got: bottom.shape(),
            });
        }
        let mut out = Matrix::zeros(top.rows() + bottom.rows(), top.cols());
        out.set_block(0, 0, top);
        out.set_block(top.rows(), 0, bottom);
        Ok(out)
    }

    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: (self.cols(), rhs.cols()),
                got: rhs.shape(),
            });
        }
        Ok(Self::from_inner(&self.0 * &rhs.0))
    }

    pub fn try_sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch {
                context: "matrix difference",
                expected: self.shape(),
                got: rhs.shape(),
            });
        }
        Ok(Self::from_inner(&self.0 - &rhs.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        self.0
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Spectral norm; see [`crate::matcore::operator_norm`].
    pub fn norm2(&self) -> f64 {
        super::operator_norm(self)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &'a Matrix) -> Matrix {
        Matrix::from_inner(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &'a Matrix) -> Matrix {
        Matrix::from_inner(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &'a Matrix) -> Matrix {
        Matrix::from_inner(&self.0 * &rhs.0)
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        Matrix::from_inner(self.0 + rhs.0)
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        Matrix::from_inner(self.0 - rhs.0)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix::from_inner(-&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            Matrix::from_real_rows(&[vec![1.0, f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
        let empty: [Vec<f64>; 0] = [];
        assert!(matches!(
            Matrix::from_real_rows(&empty),
            Err(Error::Empty { .. })
        ));
        assert!(matches!(
            Matrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn block_assembly_checks_shapes() {
        let a = Matrix::scalar(-2.0);
        let z = Matrix::scalar(0.0);
        let c = Matrix::scalar(1.0);
        let d = Matrix::scalar(-1.0);
        let full = Matrix::block2x2(&a, &z, &c, &d).unwrap();
        assert_eq!(full.to_real_rows(), vec![vec![-2.0, 0.0], vec![1.0, -1.0]]);
        let wrong = Matrix::zeros(2, 1);
        assert!(Matrix::block2x2(&a, &wrong, &c, &d).is_err());
    }

    #[test]
    fn row_major_slice_layout() {
        let m = Matrix::from_real_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.re(0, 2), 3.0);
        assert_eq!(m.re(1, 0), 4.0);
        assert_eq!(m.one_norm(), 9.0);
    }
}
