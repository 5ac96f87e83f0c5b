//! Finite-difference models on `(0, 1)` with dynamic boundary values, and a
//! mesh-refinement driver.
//!
//! Coordinates are `(u_1, .., u_n, x_0, x_1)`: interior node values followed
//! by the two boundary unknowns.

use serde::{Deserialize, Serialize};

use crate::coupled::{dirichlet_operator, dtn_operator, factorize, CoupledSystem, MaximalPair};
use crate::error::{Error, Result};
use crate::matcore::{eigenvalues, expm, spectral_abscissa, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub n_interior: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(n_interior: usize) -> Result<Self> {
        if n_interior < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 interior nodes, got {n_interior}"
            )));
        }
        let h = 1.0 / (n_interior + 1) as f64;
        Ok(Self {
            n_interior,
            h,
            nodes: (1..=n_interior).map(|i| i as f64 * h).collect(),
        })
    }

    pub fn boundary(&self) -> [f64; 2] {
        [0.0, 1.0]
    }
}

/// `(1, -2, 1) / h²` on interior rows; the end rows reference the boundary
/// columns `n` (at 0) and `n + 1` (at 1).
fn second_differences(n: usize, h: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n + 2);
    let inv = 1.0 / (h * h);
    for i in 0..n {
        a.set(i, i, (-2.0 * inv).into());
        let left = if i == 0 { n } else { i - 1 };
        let right = if i + 1 == n { n + 1 } else { i + 1 };
        a.set(i, left, inv.into());
        a.set(i, right, inv.into());
    }
    a
}

/// Laplacian with boundary dynamics `ẋ = -k ∂_ν u - γ x` and `u = x` on
/// `{0, 1}`. The outward normal derivative uses the one-sided second-order
/// stencil `(3 u_0 - 4 u_1 + u_2) / 2h` (and its mirror at 1).
pub fn build_wentzell_1d(n: usize, k: f64, gamma: f64) -> Result<CoupledSystem> {
    build_wentzell_1d_with(n, k, [gamma, gamma])
}

pub fn build_wentzell_1d_with(n: usize, k: f64, gamma: [f64; 2]) -> Result<CoupledSystem> {
    let mesh = Mesh1D::new(n)?;
    if !k.is_finite() || gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("model coefficients"));
    }
    let h = mesh.h;
    let pair = MaximalPair::new(second_differences(n, h), 2)?;
    let mut c = Matrix::zeros(2, n + 2);
    let s = -k / (2.0 * h);
    for (row, [bnd, first, second]) in [(0, [n, 0, 1]), (1, [n + 1, n - 1, n - 2])] {
        c.set(row, bnd, (3.0 * s).into());
        c.set(row, first, (-4.0 * s).into());
        c.set(row, second, s.into());
    }
    let d = Matrix::real_diag(&[-gamma[0], -gamma[1]]);
    Ok(CoupledSystem::new(pair, Matrix::zeros(n, 2), c, d)?.with_mesh(mesh))
}

/// Heat equation `u̇ = u'' - p u` with dynamic Neumann data: the boundary
/// unknowns are `w = ∂_ν u` and evolve by `ẇ = -q w`.
///
/// The ghost values `u_0`, `u_{n+1}` are eliminated through the one-sided
/// normal-derivative stencil, `u_0 = (4 u_1 - u_2 + 2h w_0) / 3`, so the
/// trace `L` is the boundary selector and `B = C = 0`. `p` is either one
/// value or one per interior node.
pub fn build_dynamic_boundary_1d(n: usize, p: &[f64], q: [f64; 2]) -> Result<CoupledSystem> {
    let mesh = Mesh1D::new(n)?;
    if p.len() != 1 && p.len() != n {
        return Err(Error::InvalidArgument(format!(
            "potential needs 1 or {n} values, got {}",
            p.len()
        )));
    }
    if p.iter().chain(&q).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "potentials p and q must be finite and nonnegative".into(),
        ));
    }
    let h = mesh.h;
    let inv = 1.0 / (h * h);
    let mut a = second_differences(n, h);
    for (row, [bnd, first, second]) in [(0, [n, 0, 1]), (n - 1, [n + 1, n - 1, n - 2])] {
        // substitute the ghost value: coefficient inv on u_ghost is spread
        a.set(row, bnd, (2.0 * h / 3.0 * inv).into());
        a.set(row, first, (a.re(row, first) + 4.0 / 3.0 * inv).into());
        a.set(row, second, (a.re(row, second) - inv / 3.0).into());
    }
    for i in 0..n {
        let pi = if p.len() == 1 { p[0] } else { p[i] };
        a.set(i, i, (a.re(i, i) - pi).into());
    }
    let pair = MaximalPair::new(a, 2)?;
    let d = Matrix::real_diag(&[-q[0], -q[1]]);
    Ok(CoupledSystem::new(pair, Matrix::zeros(n, 2), Matrix::zeros(2, n + 2), d)?.with_mesh(mesh))
}

/// Max nodal error of the discrete Dirichlet extension of boundary values
/// `x` for `u'' = λu` against the exact solution on `(0, 1)`: linear for
/// `λ = 0`, `sinh` profiles for `λ > 0`, `sin` profiles for `λ < 0`.
pub fn dirichlet_extension_error(n: usize, lambda: f64, x: [f64; 2]) -> Result<f64> {
    let mesh = Mesh1D::new(n)?;
    let pair = MaximalPair::new(second_differences(n, mesh.h), 2)?;
    let u = &dirichlet_operator(&pair, lambda)? * &Matrix::column(&x);
    let r = lambda.abs().sqrt();
    let exact = |s: f64| -> f64 {
        if lambda == 0.0 {
            x[0] * (1.0 - s) + x[1] * s
        } else if lambda > 0.0 {
            (x[0] * (r * (1.0 - s)).sinh() + x[1] * (r * s).sinh()) / r.sinh()
        } else {
            (x[0] * (r * (1.0 - s)).sin() + x[1] * (r * s).sin()) / r.sin()
        }
    };
    Ok(mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| (u.re(i, 0) - exact(*s)).abs())
        .fold(0.0, f64::max))
}

/// Least-squares slope of `ln ||e^{tA} x||` over `[t0, t1]`, sampled at
/// `samples` equally spaced times by repeated application of `e^{ΔA}`.
pub fn trajectory_decay_rate(
    a: &Matrix,
    x: &Matrix,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<f64> {
    if !(t1 > t0 && t0 >= 0.0) || samples < 2 {
        return Err(Error::InvalidArgument(
            "need 0 <= t0 < t1 and two samples".into(),
        ));
    }
    let dt = (t1 - t0) / (samples - 1) as f64;
    let step = expm(a, dt)?;
    let mut state = &expm(a, t0)? * x;
    let mut pts = Vec::with_capacity(samples);
    for i in 0..samples {
        let norm = state.frobenius();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("trajectory vanished".into()));
        }
        // renormalise to stay in range; keep the log offset
        let offset = pts.last().map(|(_, l): &(f64, f64)| *l).unwrap_or(0.0);
        pts.push((t0 + i as f64 * dt, offset + norm.ln()));
        state = &step * &state.scale(1.0 / norm);
    }
    let nf = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_l = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let cov: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_l)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    Ok(cov / var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Wentzell { k: f64, gamma: [f64; 2] },
    DynamicBoundary { p: f64, q: [f64; 2] },
}

impl ModelSpec {
    pub fn build(&self, n: usize) -> Result<CoupledSystem> {
        match self {
            Self::Wentzell { k, gamma } => build_wentzell_1d_with(n, *k, *gamma),
            Self::DynamicBoundary { p, q } => build_dynamic_boundary_1d(n, &[*p], *q),
        }
    }

    /// Point at which the boundary block and the factorization are
    /// evaluated: `0` for Wentzell (the Dirichlet Laplacian is invertible),
    /// `1` for the Neumann model, whose interior spectrum lies in
    /// `(-∞, -p]`.
    pub fn dtn_lambda(&self) -> f64 {
        match self {
            Self::Wentzell { .. } => 0.0,
            Self::DynamicBoundary { .. } => 1.0,
        }
    }

    /// Mesh-independent eigenvalues of the boundary block, ascending.
    pub fn dtn_limit(&self) -> Result<Vec<f64>> {
        let limit = match self {
            Self::Wentzell { k, gamma } => {
                Matrix::from_real_rows(&[[-k - gamma[0], *k], [*k, -k - gamma[1]]])?
            }
            Self::DynamicBoundary { q, .. } => Matrix::real_diag(&[-q[0], -q[1]]),
        };
        real_sorted(&limit)
    }
}

fn real_sorted(a: &Matrix) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = eigenvalues(a)?.into_iter().map(|z| z.re).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    pub h: f64,
    pub abscissa: f64,
    pub dtn_eigenvalues: Vec<f64>,
    /// Max distance of the boundary-block eigenvalues to their limit.
    pub dtn_error: f64,
    pub factorization_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub model: ModelSpec,
    pub rows: Vec<LevelRow>,
    /// Observed orders of the boundary-block error between consecutive
    /// levels; `None` where both errors are at rounding level.
    pub dtn_orders: Vec<Option<f64>>,
    /// Richardson orders of the abscissa from consecutive triples of levels.
    pub abscissa_orders: Vec<Option<f64>>,
}

/// Errors at or below this level carry no order information.
pub const ERROR_FLOOR: f64 = 1e-11;

pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if e_coarse <= ERROR_FLOOR && e_fine <= ERROR_FLOOR {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

pub fn convergence_study(model: &ModelSpec, levels: &[usize]) -> Result<ConvergenceTable> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("no refinement levels".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be increasing".into()));
    }
    let limit = model.dtn_limit()?;
    let lambda = model.dtn_lambda();
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let sys = model.build(n)?;
        let dtn = real_sorted(&dtn_operator(&sys.pair, &sys.c, &sys.d, lambda)?)?;
        let dtn_error = dtn
            .iter()
            .zip(&limit)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push(LevelRow {
            n,
            h: 1.0 / (n + 1) as f64,
            abscissa: spectral_abscissa(&sys.assemble())?,
            dtn_eigenvalues: dtn,
            dtn_error,
            factorization_residual: factorize(&sys, lambda)?.relative_residual(),
        });
    }
    let dtn_orders = rows
        .windows(2)
        .map(|w| observed_order(w[0].dtn_error, w[1].dtn_error, w[0].h, w[1].h))
        .collect();
    let abscissa_orders = rows
        .windows(3)
        .map(|w| {
            let d1 = (w[0].abscissa - w[1].abscissa).abs();
            let d2 = (w[1].abscissa - w[2].abscissa).abs();
            observed_order(d1, d2, w[0].h, w[1].h)
        })
        .collect();
    Ok(ConvergenceTable {
        model: model.clone(),
        rows,
        dtn_orders,
        abscissa_orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh() {
        let m = Mesh1D::new(7).unwrap();
        assert!((m.h * 8.0 - 1.0).abs() < 1e-15);
        assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(Mesh1D::new(2).is_err());
    }

    #[test]
    fn wentzell_constants_are_equilibria() {
        let sys = build_wentzell_1d(16, 1.0, 0.0).unwrap();
        let ones = Matrix::column(&[1.0; 18]);
        assert!((&sys.assemble() * &ones).max_abs() < 1e-9);
        assert!(spectral_abscissa(&sys.assemble()).unwrap().abs() < 1e-8);
        assert!(
            spectral_abscissa(&build_wentzell_1d(16, 1.0, 1.0).unwrap().assemble()).unwrap() < 0.0
        );
    }

    #[test]
    fn wentzell_without_flux_decouples() {
        let sys = build_wentzell_1d_with(8, 0.0, [0.5, 2.0]).unwrap();
        assert!(sys.c.is_zero());
        let full = sys.assemble();
        assert_eq!(full.block(8, 8, 2, 2), Matrix::real_diag(&[-0.5, -2.0]));
        assert!(full.block(8, 0, 2, 8).is_zero());
    }

    #[test]
    fn dirichlet_extension_is_linear() {
        let sys = build_wentzell_1d(10, 1.0, 0.0).unwrap();
        let dl = dirichlet_operator(&sys.pair, 0.0).unwrap();
        let u = &dl * &Matrix::column(&[2.0, -1.0]);
        for (i, x) in sys.mesh.as_ref().unwrap().nodes.iter().enumerate() {
            assert!((u.re(i, 0) - (2.0 * (1.0 - x) - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn dirichlet_extension_orders() {
        assert!(dirichlet_extension_error(16, 0.0, [1.0, 3.0]).unwrap() < 1e-13);
        let e: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| dirichlet_extension_error(n, 4.0, [1.0, 1.0]).unwrap())
            .collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
        assert!(observed_order(e[1], e[2], 1.0 / 33.0, 1.0 / 65.0).unwrap() > 1.9);
        assert!(dirichlet_extension_error(16, -1.0, [1.0, 0.0]).unwrap() < 1e-3);
    }

    #[test]
    fn dynamic_boundary_kernel() {
        let sys = build_dynamic_boundary_1d(12, &[0.0], [0.0, 0.0]).unwrap();
        let full = sys.assemble();
        let constant = Matrix::column(&[[1.0; 12].as_slice(), &[0.0, 0.0]].concat());
        assert!((&full * &constant).max_abs() < 1e-10);
        // linear profiles with matching outward fluxes are stationary too
        let h = 1.0 / 13.0;
        let mut linear: Vec<f64> = (1..=12).map(|i| i as f64 * h).collect();
        linear.extend([-1.0, 1.0]);
        assert!((&full * &Matrix::column(&linear)).max_abs() < 1e-9);
        assert!(spectral_abscissa(&full).unwrap().abs() < 1e-8);
        assert!(build_dynamic_boundary_1d(12, &[-1.0], [0.0, 0.0]).is_err());
        assert!(build_dynamic_boundary_1d(12, &[0.0], [0.0, -0.1]).is_err());
    }

    #[test]
    fn decay_rate_fit() {
        let a = Matrix::real_diag(&[-0.5, -3.0]);
        let r = trajectory_decay_rate(&a, &Matrix::column(&[1.0, 1.0]), 10.0, 40.0, 60).unwrap();
        assert!((r + 0.5).abs() < 1e-10);
    }

    #[test]
    fn study_single_level() {
        let t = convergence_study(
            &ModelSpec::Wentzell {
                k: 1.0,
                gamma: [0.0, 0.0],
            },
            &[16],
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.dtn_orders.is_empty() && t.abscissa_orders.is_empty());
    }
}
