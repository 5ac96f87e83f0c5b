//! Dyson–Phillips series of a complete block matrix around its
//! lower-triangular part: `S_0(t) = e^{tL}` with `L = [[A, 0], [C, D]]` and
//! `S_k(t) = ∫_0^t S_0(t - s) P S_{k-1}(s) ds` with `P = [[0, B], [0, 0]]`.
//!
//! Terms are computed on an internal grid of Chebyshev–Lobatto panels. Over
//! a panel the integrand is entire, so a 16-point panel of width at most
//! `1/||𝐀||` resolves it to rounding level; user times are read off by
//! barycentric interpolation.

use serde::{Deserialize, Serialize};

use crate::blocksg::{convolve, BlockSystem};
use crate::error::{Error, Result};
use crate::matcore::{exp_scaled, expm, operator_norm, Matrix};
use crate::quadrature::ChebyshevPanel;

const PANEL_POINTS: usize = 16;

/// One term `S_k` sampled on the caller's time grid.
#[derive(Debug, Clone)]
pub struct DysonTerm {
    pub k: usize,
    pub times: Vec<f64>,
    pub values: Vec<Matrix>,
    n: usize,
    m: usize,
}

impl DysonTerm {
    /// Sub-block `(i, j)`, `i, j ∈ {1, 2}`, at the `idx`-th grid time.
    pub fn block(&self, i: usize, j: usize, idx: usize) -> Matrix {
        block_of(&self.values[idx], self.n, self.m, i, j)
    }
}

fn block_of(s: &Matrix, n: usize, m: usize, i: usize, j: usize) -> Matrix {
    let (row, rows) = if i == 1 { (0, n) } else { (n, m) };
    let (col, cols) = if j == 1 { (0, n) } else { (n, m) };
    assert!(matches!((i, j), (1 | 2, 1 | 2)), "block index out of range");
    s.block(row, col, rows, cols)
}

/// All computed terms together with their values on the internal grid.
#[derive(Debug, Clone)]
pub struct DysonSeries {
    pub terms: Vec<DysonTerm>,
    /// Last term that was actually computed; later terms are below
    /// `tol / 10` everywhere and stored as zero.
    pub computed_terms: usize,
    pub panel_width: f64,
    pub panels: usize,
    n: usize,
    m: usize,
    panel: ChebyshevPanel,
    internal: Vec<Vec<Matrix>>,
}

impl DysonSeries {
    fn node_time(&self, j: usize, q: usize) -> f64 {
        self.panel_width * (j as f64 + 0.5 * (1.0 + self.panel.nodes[q]))
    }

    /// `∫_0^T ||S_k^{(ij)}(s) x|| ds` over the grid horizon `T`.
    pub fn l1_norm(&self, k: usize, i: usize, j: usize, x: &Matrix) -> f64 {
        let p = self.panel.len();
        let mut total = 0.0;
        for (idx, s) in self.internal[k].iter().enumerate() {
            let w = 0.5 * self.panel_width * self.panel.cc_weights[idx % p];
            total += w * (&block_of(s, self.n, self.m, i, j) * x).frobenius();
        }
        total
    }

    /// `Σ_{k <= K} S_k(t)` at the `idx`-th grid time.
    pub fn partial_sum(&self, k_max: usize, idx: usize) -> Matrix {
        self.terms[..=k_max.min(self.terms.len() - 1)]
            .iter()
            .skip(1)
            .fold(self.terms[0].values[idx].clone(), |acc, term| {
                &acc + &term.values[idx]
            })
    }

    /// `∫_0^T ||Σ_{k <= K} S_k(s) - e^{s𝐀}|| ds`.
    pub fn l1_reconstruct_error(&self, sys: &BlockSystem, k_max: usize) -> Result<f64> {
        let full = sys.assemble();
        let p = self.panel.len();
        let mut total = 0.0;
        for idx in 0..self.internal[0].len() {
            let (j, q) = (idx / p, idx % p);
            let mut sum = self.internal[0][idx].clone();
            for term in &self.internal[1..=k_max.min(self.internal.len() - 1)] {
                sum = &sum + &term[idx];
            }
            let exact = expm(&full, self.node_time(j, q))?;
            total +=
                0.5 * self.panel_width * self.panel.cc_weights[q] * operator_norm(&(&sum - &exact));
        }
        Ok(total)
    }
}

pub fn dyson_terms(
    sys: &BlockSystem,
    k_max: usize,
    t_grid: &[f64],
    tol: f64,
) -> Result<Vec<DysonTerm>> {
    Ok(dyson_series(sys, k_max, t_grid, tol)?.terms)
}

pub fn dyson_series(
    sys: &BlockSystem,
    k_max: usize,
    t_grid: &[f64],
    tol: f64,
) -> Result<DysonSeries> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "times must be finite and nonnegative".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be sorted".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (n, m) = (sys.n(), sys.m());
    let size = n + m;
    let lower = Matrix::block2x2(&sys.a, &Matrix::zeros(n, m), &sys.c, &sys.d)?;
    let mut insert = Matrix::zeros(size, size);
    insert.set_block(0, n, &sys.b);

    let horizon = *t_grid.last().expect("nonempty");
    let scale = operator_norm(&sys.assemble()).max(1.0);
    let panels = ((horizon * scale).ceil() as usize).max(1);
    let h = if horizon > 0.0 {
        horizon / panels as f64
    } else {
        1.0 / scale
    };
    let panel = ChebyshevPanel::new(PANEL_POINTS);
    let p = panel.len();
    let tau: Vec<f64> = panel.nodes.iter().map(|x| 0.5 * h * (1.0 + x)).collect();

    let steps: Vec<Matrix> = (0..=panels)
        .map(|d| expm(&lower, d as f64 * h))
        .collect::<Result<_>>()?;
    let local: Vec<Vec<Matrix>> = tau
        .iter()
        .map(|tq| tau.iter().map(|tr| exp_scaled(&lower, tq - tr)).collect())
        .collect();

    let mut internal: Vec<Vec<Matrix>> = Vec::with_capacity(k_max + 1);
    internal.push(
        (0..panels * p)
            .map(|idx| &steps[idx / p] * &local[idx % p][0])
            .collect(),
    );
    let mut computed_terms = 0;
    let mut exhausted = false;
    for k in 1..=k_max {
        if exhausted {
            internal.push(vec![Matrix::zeros(size, size); panels * p]);
            continue;
        }
        let g: Vec<Matrix> = internal[k - 1].iter().map(|s| &insert * s).collect();
        // full-panel contributions H(l, q) = Σ_r cc_r F_qr G(l, r)
        let mut full = Vec::with_capacity(panels * p);
        for l in 0..panels {
            for row in local.iter().take(p) {
                let mut acc = Matrix::zeros(size, size);
                for r in 0..p {
                    acc = &acc + &(&row[r] * &g[l * p + r]).scale(panel.cc_weights[r]);
                }
                full.push(acc);
            }
        }
        let mut next = Vec::with_capacity(panels * p);
        for j in 0..panels {
            for q in 0..p {
                let mut acc = Matrix::zeros(size, size);
                for l in 0..j {
                    acc = &acc + &(&steps[j - l] * &full[l * p + q]);
                }
                // partial panel from its left end up to the node itself
                for r in 0..p {
                    let w = panel.integration[q][r];
                    if w != 0.0 {
                        acc = &acc + &(&local[q][r] * &g[j * p + r]).scale(w);
                    }
                }
                next.push(acc.scale(0.5 * h));
            }
        }
        let largest = next.iter().map(operator_norm).fold(0.0, f64::max);
        internal.push(next);
        computed_terms = k;
        exhausted = largest < tol / 10.0;
    }

    let mut terms = Vec::with_capacity(k_max + 1);
    let mut term0 = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let r = convolve(&sys.d, &sys.a, &sys.c, t, tol)?;
        term0.push(Matrix::block2x2(
            &expm(&sys.a, t)?,
            &Matrix::zeros(n, m),
            &r.value,
            &expm(&sys.d, t)?,
        )?);
    }
    terms.push(DysonTerm {
        k: 0,
        times: t_grid.to_vec(),
        values: term0,
        n,
        m,
    });
    for (k, nodes) in internal.iter().enumerate().skip(1) {
        let values = t_grid
            .iter()
            .map(|&t| {
                let j = ((t / h).floor() as usize).min(panels - 1);
                let x = (2.0 * (t - j as f64 * h) / h - 1.0).clamp(-1.0, 1.0);
                let basis = panel.basis_at(x);
                let mut acc = Matrix::zeros(size, size);
                for (r, l) in basis.iter().enumerate() {
                    if *l != 0.0 {
                        acc = &acc + &nodes[j * p + r].scale(*l);
                    }
                }
                acc
            })
            .collect();
        terms.push(DysonTerm {
            k,
            times: t_grid.to_vec(),
            values,
            n,
            m,
        });
    }
    Ok(DysonSeries {
        terms,
        computed_terms,
        panel_width: h,
        panels,
        n,
        m,
        panel,
        internal,
    })
}

/// `||Σ_{k <= K} S_k(t) - e^{t𝐀}||`.
pub fn dyson_reconstruct_error(sys: &BlockSystem, k_max: usize, t: f64, tol: f64) -> Result<f64> {
    let series = dyson_series(sys, k_max, &[t], tol)?;
    let exact = expm(&sys.assemble(), t)?;
    Ok(operator_norm(&(&series.partial_sum(k_max, 0) - &exact)))
}

/// L¹ bounds on `||S_k^{(ij)}(·) x|| / ||x||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonEstimates {
    pub s11: f64,
    pub s12: f64,
    pub s21: f64,
    pub s22: f64,
    /// For `k = 0` the `(1, 2)` value keeps the `||C||^{-1}` factor of the
    /// general formula; it is a formal value (the block itself vanishes) and
    /// is infinite when `C = 0`.
    pub s12_formal: bool,
}

pub fn dyson_l1_estimates(
    k: usize,
    m1: f64,
    eps1: f64,
    m2: f64,
    eps2: f64,
    norm_b: f64,
    norm_c: f64,
) -> Result<DysonEstimates> {
    if !(eps1 < 0.0 && eps2 < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay rates must be negative, got {eps1} and {eps2}"
        )));
    }
    if !(m1 >= 1.0 && m2 >= 1.0) || !(norm_b >= 0.0 && norm_c >= 0.0) {
        return Err(Error::InvalidArgument(
            "growth constants must be at least 1 and norms nonnegative".into(),
        ));
    }
    let k = k as i32;
    let (e1, e2) = (eps1.abs(), eps2.abs());
    let bk = norm_b.powi(k);
    Ok(DysonEstimates {
        s11: m1.powi(k + 1) * m2.powi(k) * norm_c.powi(k) * bk / (e1.powi(k + 1) * e2.powi(k)),
        s12: m1.powi(k) * m2.powi(k) * norm_c.powi(k - 1) * bk / (e1.powi(k) * e2.powi(k)),
        s21: m1.powi(k + 1) * m2.powi(k + 1) * norm_c.powi(k + 1) * bk
            / (e1.powi(k + 1) * e2.powi(k + 1)),
        s22: m1.powi(k) * m2.powi(k + 1) * norm_c.powi(k) * bk / (e1.powi(k) * e2.powi(k + 1)),
        s12_formal: k == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_triangular_series_is_one_term() {
        let sys = BlockSystem::scalar(-1.0, 0.0, 2.0, -0.5);
        let series = dyson_series(&sys, 3, &[0.0, 0.5, 2.0], 1e-12).unwrap();
        assert_eq!(series.terms.len(), 4);
        for term in &series.terms[1..] {
            assert!(term.values.iter().all(Matrix::is_zero));
        }
        let s0 = &series.terms[0].values[0];
        assert!((s0 - &Matrix::identity(2)).max_abs() < 1e-15);
        assert!(dyson_reconstruct_error(&sys, 0, 2.0, 1e-12).unwrap() < 1e-12);
    }

    #[test]
    fn first_term_scalar_oracle() {
        let sys = BlockSystem::scalar(-1.0, 1.0, 1.0, -1.0);
        let grid: Vec<f64> = (0..=10).map(|i| 0.37 * i as f64).collect();
        let terms = dyson_terms(&sys, 2, &grid, 1e-12).unwrap();
        for (idx, &t) in grid.iter().enumerate() {
            let want = t * t * (-t).exp() / 2.0;
            assert!(
                (terms[1].block(1, 1, idx).re(0, 0) - want).abs() < 1e-12,
                "t = {t}"
            );
            // second term (2,1) entry: t^3 e^{-t} / 6
            let want = t.powi(3) * (-t).exp() / 6.0;
            assert!((terms[1].block(2, 1, idx).re(0, 0) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_scalar() {
        let sys = BlockSystem::scalar(-1.0, 0.5, 0.5, -1.0);
        assert!(dyson_reconstruct_error(&sys, 8, 2.0, 1e-12).unwrap() < 1e-6);
        assert!(dyson_reconstruct_error(&sys, 3, 0.0, 1e-12).unwrap() < 1e-15);
    }

    #[test]
    fn estimate_examples() {
        let e = dyson_l1_estimates(0, 2.0, -0.5, 3.0, -0.25, 7.0, 0.2).unwrap();
        assert!((e.s11 - 4.0).abs() < 1e-15);
        assert!((e.s22 - 12.0).abs() < 1e-15);
        assert!((e.s21 - 2.0 * 3.0 * 0.2 / 0.125).abs() < 1e-12);
        assert!(e.s12_formal);
        for k in 0..6 {
            let e = dyson_l1_estimates(k, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0).unwrap();
            assert_eq!([e.s11, e.s12, e.s21, e.s22], [1.0; 4]);
        }
        let e = dyson_l1_estimates(1, 1.0, -1.0, 1.0, -1.0, 4.0, 0.1).unwrap();
        assert!((e.s11 - 0.4).abs() < 1e-15);
        let e = dyson_l1_estimates(0, 1.0, -1.0, 1.0, -1.0, 1.0, 0.0).unwrap();
        assert!(e.s12.is_infinite());
        assert!(dyson_l1_estimates(0, 1.0, 0.0, 1.0, -1.0, 1.0, 1.0).is_err());
    }
}
