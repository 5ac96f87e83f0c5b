use nalgebra::linalg::Schur;
use nalgebra::DMatrix;

use super::dense::reciprocal_condition;
use super::matrix::{Matrix, C64};
use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues (with multiplicity) in deterministic order, optional
/// eigenvectors as columns, and the condition number of the eigenvector
/// basis (infinite for defective matrices).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: Option<Matrix>,
    pub condition_estimate: f64,
}

impl Spectrum {
    pub fn abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Complex Schur form `A = Q T Q^H` with unitary `Q` and upper-triangular `T`.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: Matrix,
    pub t: Matrix,
}

pub fn schur(a: &Matrix) -> Result<SchurForm> {
    let n = a.ensure_square()?;
    if n == 1 {
        return Ok(SchurForm {
            q: Matrix::identity(1),
            t: a.clone(),
        });
    }
    let decomposition = Schur::try_new(a.inner().clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNonConvergence)?;
    let (q, mut t) = decomposition.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    if q.iter()
        .chain(t.iter())
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::EigenNonConvergence);
    }
    Ok(SchurForm {
        q: Matrix::from_inner(q),
        t: Matrix::from_inner(t),
    })
}

impl SchurForm {
    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.t.get(i, i)).collect()
    }

    /// Swaps the diagonal entries `k` and `k + 1` by a unitary rotation,
    /// keeping `Q T Q^H` invariant.
    pub fn swap_adjacent(&mut self, k: usize) {
        let n = self.dim();
        let t11 = self.t.get(k, k);
        let t22 = self.t.get(k + 1, k + 1);
        let t12 = self.t.get(k, k + 1);
        let diff = t22 - t11;
        let r = (t12.norm_sqr() + diff.norm_sqr()).sqrt();
        if r == 0.0 {
            return;
        }
        // first column of the rotation spans the eigenvector for t22
        let (x1, x2) = (t12 / r, diff / r);
        let rot = |a: C64, b: C64| -> (C64, C64) {
            // [a b] * G with G = [[x1, -conj(x2)], [x2, conj(x1)]]
            (a * x1 + b * x2, -a * x2.conj() + b * x1.conj())
        };
        let rot_h = |a: C64, b: C64| -> (C64, C64) {
            // G^H * [a; b]
            (x1.conj() * a + x2.conj() * b, -x2 * a + x1 * b)
        };
        let t = &mut self.t;
        for j in k..n {
            let (a, b) = rot_h(t.get(k, j), t.get(k + 1, j));
            t.set(k, j, a);
            t.set(k + 1, j, b);
        }
        for i in 0..=(k + 1) {
            let (a, b) = rot(t.get(i, k), t.get(i, k + 1));
            t.set(i, k, a);
            t.set(i, k + 1, b);
        }
        t.set(k + 1, k, C64::new(0.0, 0.0));
        t.set(k, k, t22);
        t.set(k + 1, k + 1, t11);
        let q = &mut self.q;
        for i in 0..n {
            let (a, b) = rot(q.get(i, k), q.get(i, k + 1));
            q.set(i, k, a);
            q.set(i, k + 1, b);
        }
    }

    /// Moves every diagonal entry selected by `keep` to the leading block,
    /// preserving relative order. Returns the size of the leading block.
    pub fn reorder_leading(&mut self, keep: impl Fn(C64) -> bool) -> usize {
        let n = self.dim();
        let mut placed = 0;
        for i in 0..n {
            if keep(self.t.get(i, i)) {
                let mut pos = i;
                while pos > placed {
                    self.swap_adjacent(pos - 1);
                    pos -= 1;
                }
                placed += 1;
            }
        }
        placed
    }
}

/// Basis and coordinates for the invariant subspace belonging to a selected
/// part of the spectrum, along the complementary invariant subspace.
#[derive(Debug, Clone)]
pub struct InvariantSplit {
    /// Orthonormal basis of the selected invariant subspace (N x k).
    pub basis: Matrix,
    /// Restriction of the operator in that basis (k x k, upper triangular).
    pub restricted: Matrix,
    /// Coordinates of the spectral projection: `P x = basis * (coords * x)`.
    pub coords: Matrix,
    /// Norm of the Sylvester solution decoupling the two blocks.
    pub coupling_norm: f64,
}

/// Spectral projection onto the eigenvalues selected by `keep`. Fails if the
/// selected and remaining eigenvalues cannot be separated (Sylvester solve
/// blows up), which happens when they are numerically confluent.
pub fn invariant_split(a: &Matrix, keep: impl Fn(C64) -> bool) -> Result<InvariantSplit> {
    let n = a.ensure_square()?;
    let mut form = schur(a)?;
    let k = form.reorder_leading(&keep);
    if k == 0 {
        return Err(Error::InvalidArgument(
            "no eigenvalue selected for the invariant split".into(),
        ));
    }
    let q = form.q.inner();
    let t = form.t.inner();
    let basis = Matrix::from_inner(q.columns(0, k).into_owned());
    let restricted = Matrix::from_inner(t.view((0, 0), (k, k)).into_owned());
    if k == n {
        return Ok(InvariantSplit {
            basis,
            restricted,
            coords: Matrix::from_inner(q.adjoint()),
            coupling_norm: 0.0,
        });
    }
    let r = n - k;
    let t11 = t.view((0, 0), (k, k));
    let t12 = t.view((0, k), (k, r));
    let t22 = t.view((k, k), (r, r));
    let scale = t.iter().map(|z| z.norm()).fold(1.0, f64::max);
    // T11 X - X T22 = -T12, column by column (T22 upper triangular)
    let mut x = DMatrix::<C64>::zeros(k, r);
    for j in 0..r {
        let mut rhs: Vec<C64> = (0..k).map(|i| -t12[(i, j)]).collect();
        for l in 0..j {
            let tlj = t22[(l, j)];
            if tlj != C64::new(0.0, 0.0) {
                for (i, v) in rhs.iter_mut().enumerate() {
                    *v += x[(i, l)] * tlj;
                }
            }
        }
        let mu = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = rhs[i];
            for l in (i + 1)..k {
                acc -= t11[(i, l)] * x[(l, j)];
            }
            let den = t11[(i, i)] - mu;
            if den.norm() <= 1e-14 * scale {
                return Err(Error::DefectiveBasis(format!(
                    "selected eigenvalue {} is confluent with unselected {}",
                    t11[(i, i)],
                    mu
                )));
            }
            x[(i, j)] = acc / den;
        }
    }
    let coupling_norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(coupling_norm.is_finite() && coupling_norm < 1e12) {
        return Err(Error::DefectiveBasis(format!(
            "decoupling transformation has norm {coupling_norm:.3e}"
        )));
    }
    // coords = [I, -X] Q^H
    let mut left = DMatrix::<C64>::zeros(k, n);
    for i in 0..k {
        left[(i, i)] = C64::new(1.0, 0.0);
        for j in 0..r {
            left[(i, k + j)] = -x[(i, j)];
        }
    }
    Ok(InvariantSplit {
        basis,
        restricted,
        coords: Matrix::from_inner(left * q.adjoint()),
        coupling_norm,
    })
}

fn order_eigenvalues(values: &mut Vec<C64>, scale: f64) -> Vec<usize> {
    let tol = 1e-12 * scale.max(1.0);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].re.total_cmp(&values[a].re));
    // group nearly equal real parts, then order each group by imaginary part
    let mut cluster = vec![0usize; values.len()];
    let mut current = 0;
    for w in 1..idx.len() {
        if values[idx[w - 1]].re - values[idx[w]].re > tol {
            current += 1;
        }
        cluster[idx[w]] = current;
    }
    idx.sort_by(|&a, &b| {
        cluster[a]
            .cmp(&cluster[b])
            .then(values[b].im.total_cmp(&values[a].im))
    });
    let ordered: Vec<C64> = idx.iter().map(|&i| values[i]).collect();
    *values = ordered;
    idx
}

fn clean_real_spectrum(values: &mut [C64], scale: f64) {
    let tol = 1e-12 * scale.max(1.0);
    for z in values.iter_mut() {
        if z.im.abs() < tol {
            z.im = 0.0;
        }
    }
}

/// Eigenvalues only, ordered by descending real part, then descending
/// imaginary part.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<C64>> {
    let form = schur(a)?;
    let mut values = form.diagonal();
    let scale = a.one_norm();
    if a.is_real() {
        clean_real_spectrum(&mut values, scale);
    }
    order_eigenvalues(&mut values, scale);
    Ok(values)
}

/// Full eigendecomposition: ordered eigenvalues and unit eigenvectors
/// obtained by back substitution on the Schur factor.
pub fn eigendecompose(a: &Matrix) -> Result<Spectrum> {
    let n = a.ensure_square()?;
    let form = schur(a)?;
    let t = form.t.inner();
    let scale = a.one_norm();
    let small = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=i {
                acc += t[(j, l)] * v[l];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            v[j] = -acc / den;
        }
        let x = form.q.inner() * nalgebra::DVector::from_vec(v);
        let norm = x.norm();
        vectors.set_column(i, &(x / C64::new(norm, 0.0)));
    }
    let mut values = form.diagonal();
    if a.is_real() {
        clean_real_spectrum(&mut values, scale);
    }
    let perm = order_eigenvalues(&mut values, scale);
    let ordered = DMatrix::from_fn(n, n, |r, c| vectors[(r, perm[c])]);
    let vectors = Matrix::from_inner(ordered);
    let rcond = reciprocal_condition(&vectors)?;
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: Some(vectors),
        condition_estimate: if rcond > 0.0 {
            1.0 / rcond
        } else {
            f64::INFINITY
        },
    })
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Optimal one-to-one pairing of two equally sized spectra (minimum total
/// distance); returns the largest paired distance.
pub fn match_spectra(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "spectra to match",
            expected: (a.len(), 1),
            got: (b.len(), 1),
        });
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let cost = |i: usize, j: usize| (a[i] - b[j]).norm();
    let assignment = hungarian(n, cost);
    Ok((0..n).map(|i| cost(i, assignment[i])).fold(0.0, f64::max))
}

/// Min-cost perfect assignment on an n x n cost function (potential-based
/// Hungarian algorithm). Returns the column assigned to each row.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
