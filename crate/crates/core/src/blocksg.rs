//! Block systems `[[A, B], [C, D]]` with diagonal domain: assembly, the
//! off-diagonal convolution entries of triangular semigroups, and the
//! Young-type bounds on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{expm, operator_norm, solve, Matrix};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl BlockSystem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let n = a.ensure_square()?;
        let m = d.ensure_square()?;
        for (context, got, expected) in [
            ("block B", b.shape(), (n, m)),
            ("block C", c.shape(), (m, n)),
        ] {
            if got != expected {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                });
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Scalar blocks `n = m = 1`.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            a: Matrix::scalar(a),
            b: Matrix::scalar(b),
            c: Matrix::scalar(c),
            d: Matrix::scalar(d),
        }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.d.rows()
    }

    pub fn assemble(&self) -> Matrix {
        Matrix::block2x2(&self.a, &self.b, &self.c, &self.d)
            .expect("block dimensions are validated on construction")
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.c.is_zero()
    }
}

#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    pub value: Matrix,
    pub panels: usize,
    /// Norm difference between the last two refinements.
    pub est_error: f64,
}

pub const MAX_DOUBLINGS: usize = 20;

/// `∫_0^t e^{(t-s) G_out} K e^{s G_in} ds` by composite 8-point
/// Gauss–Legendre, doubling the panel count until two successive values
/// agree to `tol` in operator norm (or to rounding level of the summands).
pub fn convolve(
    g_out: &Matrix,
    g_in: &Matrix,
    k: &Matrix,
    t: f64,
    tol: f64,
) -> Result<ConvolutionResult> {
    let p = g_out.ensure_square()?;
    let q = g_in.ensure_square()?;
    if k.shape() != (p, q) {
        return Err(Error::DimensionMismatch {
            context: "convolution kernel",
            expected: (p, q),
            got: k.shape(),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if t == 0.0 || k.is_zero() {
        return Ok(ConvolutionResult {
            value: Matrix::zeros(p, q),
            panels: 0,
            est_error: 0.0,
        });
    }

    let gl = GaussLegendre::new(8);
    let width = t * (operator_norm(g_out) + operator_norm(g_in));
    let mut panels = ((width / 4.0).ceil() as usize).max(1);
    let (mut prev, _) = composite(&gl, g_out, g_in, k, t, panels)?;
    let mut est_error = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let (value, magnitude) = composite(&gl, g_out, g_in, k, t, panels)?;
        est_error = operator_norm(&(&value - &prev));
        let floor = 64.0 * f64::EPSILON * magnitude;
        prev = value;
        if est_error < tol || est_error <= floor {
            return Ok(ConvolutionResult {
                value: prev,
                panels,
                est_error,
            });
        }
    }
    Err(Error::QuadratureNonConvergence {
        best: Box::new(prev),
        est_error,
        doublings: MAX_DOUBLINGS,
    })
}

/// The same integral with a fixed number of equal Gauss–Legendre panels.
pub fn convolve_with_panels(
    g_out: &Matrix,
    g_in: &Matrix,
    k: &Matrix,
    t: f64,
    panels: usize,
) -> Result<Matrix> {
    if panels == 0 {
        return Err(Error::InvalidArgument("need at least one panel".into()));
    }
    if k.shape() != (g_out.ensure_square()?, g_in.ensure_square()?) {
        return Err(Error::DimensionMismatch {
            context: "convolution kernel",
            expected: (g_out.rows(), g_in.rows()),
            got: k.shape(),
        });
    }
    if t == 0.0 {
        return Ok(Matrix::zeros(k.rows(), k.cols()));
    }
    Ok(composite(&GaussLegendre::new(8), g_out, g_in, k, t, panels)?.0)
}

/// Panel sum plus the total magnitude of the summands.
fn composite(
    gl: &GaussLegendre,
    g_out: &Matrix,
    g_in: &Matrix,
    k: &Matrix,
    t: f64,
    panels: usize,
) -> Result<(Matrix, f64)> {
    let h = t / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    let mut magnitude = 0.0;
    for j in 0..panels {
        let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
        let mut acc = Matrix::zeros(k.rows(), k.cols());
        for (s, w) in gl.mapped(lo, hi) {
            let term = &(&expm(g_out, t - s)? * k) * &expm(g_in, s)?;
            magnitude += w * term.frobenius();
            acc = &acc + &term.scale(w);
        }
        parts.push(acc);
    }
    Ok((pairwise_sum(parts), magnitude))
}

fn pairwise_sum(mut parts: Vec<Matrix>) -> Matrix {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(&a + &b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().expect("at least one panel")
}

/// Closed form of the scalar convolution `∫_0^t e^{(t-s)a_out} k e^{s a_in} ds`.
pub fn scalar_convolution(a_out: f64, a_in: f64, k: f64, t: f64) -> f64 {
    let gap = a_out - a_in;
    if gap.abs() < 1e-8 * a_out.abs().max(a_in.abs()).max(1.0) {
        let a = 0.5 * (a_out + a_in);
        k * t * (a * t).exp()
    } else {
        k * ((a_out * t).exp() - (a_in * t).exp()) / gap
    }
}

/// Closed form of the lower-left entry `R(t)` when one diagonal block
/// vanishes: `D^{-1}(e^{tD} - I) C` for `A = 0`, `C A^{-1}(e^{tA} - I)` for
/// `D = 0`.
pub fn closed_form_r(sys: &BlockSystem, t: f64) -> Result<Matrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    if sys.a.is_zero() && !sys.d.is_zero() {
        let growth = expm(&sys.d, t)?.shift(-1.0);
        solve(&sys.d, &(&growth * &sys.c))
    } else if sys.d.is_zero() && !sys.a.is_zero() {
        let growth = expm(&sys.a, t)?.shift(-1.0);
        // C A^{-1} X = (X^T A^{-T} C^T)^T, and A commutes with e^{tA}
        let right = solve(&sys.a.transpose(), &sys.c.transpose())?.transpose();
        Ok(&right * &growth)
    } else {
        Err(Error::Unsupported(
            "closed form needs exactly one of A, D to vanish".into(),
        ))
    }
}

/// Residual of the triangular block formula for `e^{t𝐀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockFormulaCheck {
    pub residual: f64,
    pub est_error: f64,
    pub panels: usize,
}

/// Compares `expm(assemble(sys), t)` with `[[e^{tA}, 0], [R(t), e^{tD}]]`
/// (for `B = 0`) or `[[e^{tA}, S(t)], [0, e^{tD}]]` (for `C = 0`).
pub fn verify_semigroup_blocks(sys: &BlockSystem, t: f64, tol: f64) -> Result<BlockFormulaCheck> {
    let (n, m) = (sys.n(), sys.m());
    let ea = expm(&sys.a, t)?;
    let ed = expm(&sys.d, t)?;
    let (conv, formula) = if sys.is_lower_triangular() {
        let r = convolve(&sys.d, &sys.a, &sys.c, t, tol)?;
        let f = Matrix::block2x2(&ea, &Matrix::zeros(n, m), &r.value, &ed)?;
        (r, f)
    } else if sys.is_upper_triangular() {
        let s = convolve(&sys.a, &sys.d, &sys.b, t, tol)?;
        let f = Matrix::block2x2(&ea, &s.value, &Matrix::zeros(m, n), &ed)?;
        (s, f)
    } else {
        return Err(Error::Unsupported(
            "block formula needs B = 0 or C = 0".into(),
        ));
    };
    let full = expm(&sys.assemble(), t)?;
    Ok(BlockFormulaCheck {
        residual: operator_norm(&(&full - &formula)),
        est_error: conv.est_error,
        panels: conv.panels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungBounds {
    /// Bound on `sup_t ||R(t)||`.
    pub sup_bound: f64,
    /// Bound on `∫_0^∞ ||R(t) x|| dt / ||x||`; `None` when only one rate is
    /// known and the rates differ.
    pub l1_bound: Option<f64>,
}

/// Young-inequality bounds for `R(t) = ∫_0^t e^{(t-s)D} C e^{sA} ds` from
/// `||e^{tA}|| <= M1 e^{eps1 t}`, `||e^{tD}|| <= M2 e^{eps2 t}`.
///
/// With `same_rate` both semigroups decay at `eps1` and the supremum
/// sharpens by `1/e` (the maximum of `t e^{eps t}`). `eps2`, when given,
/// enables the two-rate L¹ bound `M1 M2 ||C|| / (eps1 eps2)`.
pub fn young_bounds(
    m1: f64,
    eps1: f64,
    m2: f64,
    norm_c: f64,
    same_rate: bool,
    eps2: Option<f64>,
) -> Result<YoungBounds> {
    if !(eps1 < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decay rate must be negative, got {eps1}"
        )));
    }
    if let Some(e2) = eps2 {
        if !(e2 < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "decay rate must be negative, got {e2}"
            )));
        }
    }
    if !(m1 >= 1.0 && m2 >= 1.0 && norm_c >= 0.0) {
        return Err(Error::InvalidArgument(
            "growth constants must be at least 1 and the norm nonnegative".into(),
        ));
    }
    let product = m1 * m2 * norm_c;
    let sup_bound = if same_rate {
        -product / (eps1 * std::f64::consts::E)
    } else {
        -product / eps1
    };
    let l1_bound = match (same_rate, eps2) {
        (true, _) => Some(product / (eps1 * eps1)),
        (false, Some(e2)) => Some(product / (eps1 * e2)),
        (false, None) => None,
    };
    Ok(YoungBounds {
        sup_bound,
        l1_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_scalar() {
        let sys = BlockSystem::scalar(-2.0, 0.0, 1.0, -1.0);
        assert_eq!(
            sys.assemble().to_real_rows(),
            vec![vec![-2.0, 0.0], vec![1.0, -1.0]]
        );
    }

    #[test]
    fn rejects_bad_dimensions() {
        let err = BlockSystem::new(
            Matrix::identity(2),
            Matrix::zeros(2, 1),
            Matrix::zeros(2, 1),
            Matrix::scalar(1.0),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn convolution_known_values() {
        let r = convolve(
            &Matrix::scalar(-1.0),
            &Matrix::scalar(0.0),
            &Matrix::scalar(1.0),
            2.0,
            1e-12,
        )
        .unwrap();
        assert!((r.value.re(0, 0) - (1.0 - (-2f64).exp())).abs() < 1e-13);
        assert!(r.est_error < 1e-12);

        let r = convolve(
            &Matrix::scalar(-0.7),
            &Matrix::scalar(-0.7),
            &Matrix::scalar(3.0),
            1.5,
            1e-12,
        )
        .unwrap();
        assert!((r.value.re(0, 0) - scalar_convolution(-0.7, -0.7, 3.0, 1.5)).abs() < 1e-12);

        let zero = convolve(
            &Matrix::scalar(-1.0),
            &Matrix::scalar(-1.0),
            &Matrix::scalar(1.0),
            0.0,
            1e-12,
        )
        .unwrap();
        assert!(zero.value.is_zero());
    }

    #[test]
    fn confluent_closed_form_is_continuous() {
        let exact = scalar_convolution(-1.0, -1.0, 2.0, 3.0);
        let near = scalar_convolution(-1.0, -1.0 + 1e-6, 2.0, 3.0);
        assert!((exact - 2.0 * 3.0 * (-3f64).exp()).abs() < 1e-15);
        assert!((exact - near).abs() < 1e-6);
    }

    #[test]
    fn closed_form_cases() {
        let sys = BlockSystem::scalar(0.0, 0.0, 1.0, -1.0);
        let r = closed_form_r(&sys, 1.0).unwrap();
        assert!((r.re(0, 0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(closed_form_r(&sys, 0.0).unwrap().is_zero());
        assert!((closed_form_r(&sys, 60.0).unwrap().re(0, 0) - 1.0).abs() < 1e-15);

        // dual case D = 0: R(t) = ∫ C e^{sA} ds
        let dual = BlockSystem::new(
            Matrix::real_diag(&[-1.0, -2.0]),
            Matrix::zeros(2, 1),
            Matrix::from_real_rows(&[[1.0, 1.0]]).unwrap(),
            Matrix::scalar(0.0),
        )
        .unwrap();
        let r = closed_form_r(&dual, 1.0).unwrap();
        let q = convolve(&dual.d, &dual.a, &dual.c, 1.0, 1e-13).unwrap();
        assert!((&r - &q.value).max_abs() < 1e-12);

        let general = BlockSystem::scalar(-1.0, 0.0, 1.0, -1.0);
        assert!(matches!(
            closed_form_r(&general, 1.0),
            Err(Error::Unsupported(_))
        ));
        let singular = BlockSystem::new(
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(2, 1),
            Matrix::real_diag(&[-1.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            closed_form_r(&singular, 1.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn triangular_formula() {
        let sys = BlockSystem::scalar(-2.0, 0.0, 1.0, -1.0);
        let check = verify_semigroup_blocks(&sys, 1.0, 1e-12).unwrap();
        assert!(check.residual < 1e-8);
        let full = expm(&sys.assemble(), 1.0).unwrap();
        assert!((full.re(1, 0) - 0.232_544_157_934_830_4).abs() < 1e-12);

        let upper = BlockSystem::scalar(-1.0, 5.0, 0.0, -3.0);
        let check = verify_semigroup_blocks(&upper, 0.0, 1e-12).unwrap();
        assert_eq!(check.residual, 0.0);

        let full = BlockSystem::scalar(-1.0, 1.0, 1.0, -1.0);
        assert!(matches!(
            verify_semigroup_blocks(&full, 1.0, 1e-10),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn young_examples() {
        let y = young_bounds(1.0, -1.0, 1.0, 1.0, false, None).unwrap();
        assert_eq!(y.sup_bound, 1.0);
        assert_eq!(y.l1_bound, None);
        let y = young_bounds(1.0, -1.0, 1.0, 1.0, true, None).unwrap();
        assert!((y.sup_bound - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(y.l1_bound, Some(1.0));
        let y = young_bounds(2.0, -1.0, 3.0, 0.0, false, Some(-2.0)).unwrap();
        assert_eq!(y.sup_bound, 0.0);
        assert_eq!(y.l1_bound, Some(0.0));
        assert!(young_bounds(1.0, 0.0, 1.0, 1.0, false, None).is_err());
    }
}
