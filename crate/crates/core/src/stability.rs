//! Stability certificates for block systems and the asymptotics of the
//! lower-left convolution entry.
//!
//! Certificates take explicit growth constants `(M, eps)`; those are not
//! unique, so every certificate records the values it was given. The
//! `*_for_system` wrappers obtain them from [`growth_bound`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::blocksg::{convolve, BlockSystem};
use crate::error::{Error, Result};
use crate::matcore::{eigenvalues, operator_norm, solve, spectral_abscissa, Matrix};
use crate::semigroup::{classify_orbit, growth_bound, GrowthBound, OrbitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Bpt,
    CompleteProduct,
    CascadeTriangular,
    Nonresonance,
    Stabilizability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub criterion: Criterion,
    /// Exactly `margin > 0`; boundary cases are not satisfied.
    pub satisfied: bool,
    pub margin: f64,
    /// Exponential rate implied by the criterion, only when negative.
    pub predicted_rate: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
}

impl Certificate {
    fn new(criterion: Criterion, margin: f64, rate: Option<f64>, inputs: &[(&str, f64)]) -> Self {
        Self {
            criterion,
            satisfied: margin > 0.0,
            margin,
            predicted_rate: rate.filter(|r| *r < 0.0),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn check_constants(ms: &[f64], epsilons: &[f64], norms: &[f64]) -> Result<()> {
    if let Some(e) = epsilons.iter().find(|e| !(**e < 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "decay rate must be negative, got {e}"
        )));
    }
    if let Some(m) = ms.iter().find(|m| !(**m >= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "growth constant must be at least 1, got {m}"
        )));
    }
    if let Some(n) = norms.iter().find(|n| !(**n >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "norm must be nonnegative, got {n}"
        )));
    }
    Ok(())
}

/// Bounded perturbation of the diagonal part: rate `eps + M max(||B||, ||C||)`.
pub fn bpt_certificate(m: f64, eps: f64, norm_b: f64, norm_c: f64) -> Result<Certificate> {
    if !(m >= 1.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need M >= 1 and finite eps, got M = {m}, eps = {eps}"
        )));
    }
    check_constants(&[], &[], &[norm_b, norm_c])?;
    let rate = eps + m * norm_b.max(norm_c);
    Ok(Certificate::new(
        Criterion::Bpt,
        -rate,
        Some(rate),
        &[
            ("M", m),
            ("eps", eps),
            ("norm_B", norm_b),
            ("norm_C", norm_c),
            ("exponent", rate),
        ],
    ))
}

/// Product criterion `M1 M2 ||B|| ||C|| < eps1 eps2`.
pub fn complete_certificate(
    m1: f64,
    eps1: f64,
    m2: f64,
    eps2: f64,
    norm_b: f64,
    norm_c: f64,
) -> Result<Certificate> {
    check_constants(&[m1, m2], &[eps1, eps2], &[norm_b, norm_c])?;
    let margin = eps1 * eps2 - m1 * m2 * norm_b * norm_c;
    Ok(Certificate::new(
        Criterion::CompleteProduct,
        margin,
        None,
        &[
            ("M1", m1),
            ("eps1", eps1),
            ("M2", m2),
            ("eps2", eps2),
            ("norm_B", norm_b),
            ("norm_C", norm_c),
        ],
    ))
}

/// Feedback condition `||C|| ||B - D̄₀(D + C D₀)|| < eps1 eps2 / (M1 M2)`.
pub fn stabilizability_certificate(
    m1: f64,
    eps1: f64,
    m2: f64,
    eps2: f64,
    norm_c: f64,
    norm_feedthrough: f64,
) -> Result<Certificate> {
    check_constants(&[m1, m2], &[eps1, eps2], &[norm_c, norm_feedthrough])?;
    let margin = eps1 * eps2 / (m1 * m2) - norm_c * norm_feedthrough;
    Ok(Certificate::new(
        Criterion::Stabilizability,
        margin,
        None,
        &[
            ("M1", m1),
            ("eps1", eps1),
            ("M2", m2),
            ("eps2", eps2),
            ("norm_C", norm_c),
            ("norm_feedthrough", norm_feedthrough),
        ],
    ))
}

/// Triangular systems are stable exactly when both diagonal blocks are;
/// the margin is `min(-abscissa(A), -abscissa(D))`.
pub fn cascade_certificate(sys: &BlockSystem) -> Result<Certificate> {
    if !(sys.is_lower_triangular() || sys.is_upper_triangular()) {
        return Err(Error::Unsupported(
            "cascade criterion needs B = 0 or C = 0".into(),
        ));
    }
    let alpha_a = spectral_abscissa(&sys.a)?;
    let alpha_d = spectral_abscissa(&sys.d)?;
    let margin = (-alpha_a).min(-alpha_d);
    Ok(Certificate::new(
        Criterion::CascadeTriangular,
        margin,
        Some(alpha_a.max(alpha_d)),
        &[("abscissa_A", alpha_a), ("abscissa_D", alpha_d)],
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub certificate: Certificate,
    /// `{η : iη ∈ σ(A)}` within the tolerance, ascending.
    pub half_line_spectrum: Vec<f64>,
}

/// Checks that `σ(A)` and `σ(D)` share no point of the imaginary axis.
///
/// A pair `(λ, μ)` resonates when `|Re λ|`, `|Re μ|` and `|Im λ - Im μ|`
/// are all below `tol`; the margin is the smallest such pair distance
/// `max(|Re λ|, |Re μ|, |Im λ - Im μ|)` minus `tol`.
pub fn nonresonance_check(a: &Matrix, d: &Matrix, tol: f64) -> Result<NonresonanceReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let sa = eigenvalues(a)?;
    let sd = eigenvalues(d)?;
    let mut closest = f64::INFINITY;
    for l in &sa {
        for u in &sd {
            let dist = l.re.abs().max(u.re.abs()).max((l.im - u.im).abs());
            closest = closest.min(dist);
        }
    }
    let mut half_line: Vec<f64> = sa
        .iter()
        .filter(|l| l.re.abs() < tol)
        .map(|l| l.im)
        .collect();
    half_line.sort_by(f64::total_cmp);
    Ok(NonresonanceReport {
        certificate: Certificate::new(
            Criterion::Nonresonance,
            closest - tol,
            None,
            &[("tol", tol), ("closest_pair_distance", closest)],
        ),
        half_line_spectrum: half_line,
    })
}

#[derive(Debug, Clone)]
pub struct AsymptoticLimit {
    /// `(-D)^{-1} C lim e^{tA} x`.
    pub predicted: Matrix,
    /// `D^{-1} C lim e^{tA} x`, the opposite sign, kept for comparison.
    pub unnegated_form: Matrix,
    /// `R(horizon) x` by quadrature.
    pub observed: Matrix,
    pub discrepancy: f64,
}

/// Limit of `R(t) x` for a lower-triangular system with stable `D` and a
/// convergent orbit `e^{tA} x`.
///
/// Since `R(t) = ∫_0^t e^{(t-s)D} C e^{sA} ds`, for `e^{sA}x → y` the
/// limit is `∫_0^∞ e^{sD} ds C y = (-D)^{-1} C y`.
pub fn asymptotic_limit_r(sys: &BlockSystem, x: &Matrix, horizon: f64) -> Result<AsymptoticLimit> {
    if !sys.is_lower_triangular() {
        return Err(Error::Unsupported("asymptotic limit needs B = 0".into()));
    }
    let orbit = classify_orbit(&sys.a, x, horizon)?;
    let limit = match (orbit.kind, orbit.limit) {
        (OrbitKind::Decaying | OrbitKind::ConvergentNonzero, Some(limit)) => limit,
        (kind, _) => {
            return Err(Error::NonConvergentOrbit(format!(
                "orbit of x under A is {kind:?}"
            )))
        }
    };
    let forcing = &sys.c * &limit;
    let unnegated_form = solve(&sys.d, &forcing)?;
    let alpha_d = spectral_abscissa(&sys.d)?;
    if alpha_d >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "D must be stable, spectral abscissa is {alpha_d}"
        )));
    }
    let predicted = -&unnegated_form;
    let observed = &convolve(&sys.d, &sys.a, &sys.c, horizon, 1e-12)?.value * x;
    let discrepancy = (&predicted - &observed).frobenius();
    Ok(AsymptoticLimit {
        predicted,
        unnegated_form,
        observed,
        discrepancy,
    })
}

/// Scalar system `A = D = -1` with `||B|| = 1 + 4u > 1` and
/// `||B|| ||C|| = 0.9 v < 1`, for `u, v ∈ [0, 1)`: the product criterion
/// holds while the perturbation bound `-1 + max(B, C)` is positive.
pub fn sharper_witness(u: f64, v: f64) -> BlockSystem {
    let b = 1.0 + 4.0 * u;
    BlockSystem::scalar(-1.0, b, 0.9 * v / b, -1.0)
}

/// Growth constants of both diagonal blocks, in the order `(A, D)`.
pub fn diagonal_growth(
    sys: &BlockSystem,
    margin: f64,
    horizon: f64,
) -> Result<(GrowthBound, GrowthBound)> {
    Ok((
        growth_bound(&sys.a, margin, horizon)?,
        growth_bound(&sys.d, margin, horizon)?,
    ))
}

/// [`bpt_certificate`] with `(M, eps)` of `diag(A, D)` from [`growth_bound`].
pub fn bpt_for_system(sys: &BlockSystem, margin: f64, horizon: f64) -> Result<Certificate> {
    let (n, m) = (sys.n(), sys.m());
    let diag = Matrix::block2x2(&sys.a, &Matrix::zeros(n, m), &Matrix::zeros(m, n), &sys.d)?;
    let gb = growth_bound(&diag, margin, horizon)?;
    bpt_certificate(gb.m, gb.omega, operator_norm(&sys.b), operator_norm(&sys.c))
}

/// [`complete_certificate`] with constants of `A` and `D` from [`growth_bound`].
pub fn complete_for_system(sys: &BlockSystem, margin: f64, horizon: f64) -> Result<Certificate> {
    let (ga, gd) = diagonal_growth(sys, margin, horizon)?;
    complete_certificate(
        ga.m,
        ga.omega,
        gd.m,
        gd.omega,
        operator_norm(&sys.b),
        operator_norm(&sys.c),
    )
}
