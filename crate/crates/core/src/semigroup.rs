//! Analysis of the semigroup `t -> e^{tA}` of a single generator: certified
//! growth constants, orbit classification, integrability of orbits and a
//! numerical sector angle for analyticity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues, expm, invariant_split, operator_norm, solve, spectral_abscissa, Matrix, C64,
};
use crate::quadrature::adaptive_integrate;

const UNIFORM_SAMPLES: usize = 400;
const GEOMETRIC_SAMPLES: usize = 200;
const REFINED_MAXIMA: usize = 8;

/// Constants `(M, omega)` with `||e^{tA}|| <= M e^{omega t}` on every sampled
/// `t` in `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub m: f64,
    pub omega: f64,
    pub horizon: f64,
    pub samples: usize,
}

impl GrowthBound {
    pub fn bound_at(&self, t: f64) -> f64 {
        self.m * (self.omega * t).exp()
    }
}

/// Growth constants with `omega = spectral_abscissa(A) + omega_margin` and
/// `M` the largest sampled value of `||e^{tA}|| e^{-omega t}` (at least 1).
pub fn growth_bound(a: &Matrix, omega_margin: f64, horizon: f64) -> Result<GrowthBound> {
    if !(omega_margin > 0.0) || !omega_margin.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "omega margin must be positive, got {omega_margin}"
        )));
    }
    let omega = spectral_abscissa(a)? + omega_margin;
    growth_bound_at_rate(a, omega, horizon)
}

/// Smallest sampled `M >= 1` for a prescribed exponent `omega`.
///
/// The sample grid is the union of a uniform and a geometric grid on
/// `[0, horizon]`; every local maximum of the sampled profile is then
/// refined by golden-section search.
pub fn growth_bound_at_rate(a: &Matrix, omega: f64, horizon: f64) -> Result<GrowthBound> {
    a.ensure_square()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    if !omega.is_finite() {
        return Err(Error::NonFinite("growth exponent"));
    }
    let profile = |t: f64| -> Result<f64> {
        let norm = operator_norm(&expm(a, t)?);
        if norm == 0.0 {
            return Ok(0.0);
        }
        Ok((norm.ln() - omega * t).exp())
    };

    let mut times: Vec<f64> = (0..UNIFORM_SAMPLES)
        .map(|i| horizon * i as f64 / (UNIFORM_SAMPLES - 1) as f64)
        .collect();
    let ratio = (1e6f64).powf(1.0 / (GEOMETRIC_SAMPLES - 1) as f64);
    let mut t = horizon * 1e-6;
    for _ in 0..GEOMETRIC_SAMPLES {
        times.push(t.min(horizon));
        t *= ratio;
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let values = times
        .iter()
        .map(|&t| profile(t))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = times.len();
    let mut best = values.iter().copied().fold(1.0, f64::max);

    let mut peaks: Vec<usize> = (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] >= values[i - 1];
            let right = i + 1 == values.len() || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    peaks.truncate(REFINED_MAXIMA);
    for i in peaks {
        let lo = times[i.saturating_sub(1)];
        let hi = times[(i + 1).min(times.len() - 1)];
        if hi <= lo {
            continue;
        }
        let (peak, evals) = golden_max(&profile, lo, hi)?;
        samples += evals;
        best = best.max(peak);
    }
    Ok(GrowthBound {
        m: best,
        omega,
        horizon,
        samples,
    })
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, usize)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut best = f1.max(f2);
    let mut evals = 2;
    for _ in 0..40 {
        if hi - lo <= 1e-10 * (1.0 + hi.abs()) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
            best = best.max(f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
            best = best.max(f2);
        }
        evals += 1;
    }
    Ok((best, evals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Decaying,
    ConvergentNonzero,
    BoundedNonconvergent,
    Unbounded,
}

/// Asymptotic class of `t -> e^{tA} x`.
#[derive(Debug, Clone)]
pub struct OrbitClass {
    pub kind: OrbitKind,
    /// `Some(0)` for decaying orbits, the spectral projection onto the
    /// kernel for convergent ones, `None` otherwise.
    pub limit: Option<Matrix>,
    /// Largest sampled `||e^{tA} x||` on `[0, horizon]`.
    pub sampled_sup: f64,
    /// `||e^{horizon A} x - limit||` when a limit exists.
    pub horizon_residual: Option<f64>,
}

fn check_state(a: &Matrix, x: &Matrix) -> Result<usize> {
    let n = a.ensure_square()?;
    if x.shape() != (n, 1) {
        return Err(Error::DimensionMismatch {
            context: "state vector",
            expected: (n, 1),
            got: x.shape(),
        });
    }
    Ok(n)
}

/// Classifies the orbit of `x` from the spectral components of `x`:
/// components on eigenvalues with positive real part, or on non-semisimple
/// parts of imaginary-axis eigenvalues, make it unbounded; semisimple
/// components on nonzero imaginary eigenvalues make it oscillate; semisimple
/// components at zero survive as the limit.
pub fn classify_orbit(a: &Matrix, x: &Matrix, horizon: f64) -> Result<OrbitClass> {
    let n = check_state(a, x)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let scale = a.one_norm().max(1.0);
    let re_tol = 1e-7 * scale;
    let cluster_tol = 1e-6 * scale;
    let x_norm = x.frobenius();

    let mut unbounded = false;
    let mut oscillating = false;
    let mut limit = Matrix::zeros(n, 1);
    let mut has_limit = false;

    if x_norm > 0.0 {
        let critical: Vec<C64> = eigenvalues(a)?
            .into_iter()
            .filter(|z| z.re >= -re_tol)
            .collect();
        for cluster in clusters(&critical, cluster_tol) {
            let center = cluster.iter().sum::<C64>() / C64::new(cluster.len() as f64, 0.0);
            let members = cluster.clone();
            let split =
                invariant_split(a, |z| members.iter().any(|m| (z - m).norm() <= cluster_tol))?;
            let z = &split.coords * x;
            let threshold = 1e-10 * x_norm * split.coords.frobenius().max(1.0);
            let z_norm = z.frobenius();
            if z_norm <= threshold {
                continue;
            }
            let nilpotent =
                &split.restricted - &Matrix::identity(cluster.len()).scale_complex(center);
            let semisimple = (&nilpotent * &z).frobenius() <= 1e-7 * scale * z_norm;
            if center.re > re_tol || !semisimple {
                unbounded = true;
            } else if center.norm() <= re_tol {
                limit = &limit + &(&split.basis * &z);
                has_limit = true;
            } else {
                oscillating = true;
            }
        }
    }

    let kind = if unbounded {
        OrbitKind::Unbounded
    } else if oscillating {
        OrbitKind::BoundedNonconvergent
    } else if has_limit {
        OrbitKind::ConvergentNonzero
    } else {
        OrbitKind::Decaying
    };
    let limit = match kind {
        OrbitKind::Decaying => Some(Matrix::zeros(n, 1)),
        OrbitKind::ConvergentNonzero => {
            let limit = if a.is_real() && x.is_real() {
                limit.clean_imaginary(1e-12)
            } else {
                limit
            };
            Some(limit)
        }
        _ => None,
    };

    let mut sampled_sup: f64 = x_norm;
    const CHECKS: usize = 64;
    let mut last = x.clone();
    for i in 1..=CHECKS {
        let t = horizon * i as f64 / CHECKS as f64;
        last = &expm(a, t)? * x;
        sampled_sup = sampled_sup.max(last.frobenius());
    }
    let horizon_residual = limit.as_ref().map(|l| (&last - l).frobenius());
    Ok(OrbitClass {
        kind,
        limit,
        sampled_sup,
        horizon_residual,
    })
}

/// Single-linkage grouping of eigenvalues closer than `tol`.
fn clusters(values: &[C64], tol: f64) -> Vec<Vec<C64>> {
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for &v in values {
        let hits: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|w| (w - v).norm() <= tol))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => groups.push(vec![v]),
            [first, rest @ ..] => {
                let first = *first;
                for &i in rest.iter().rev() {
                    let moved = groups.remove(i);
                    groups[first].extend(moved);
                }
                groups[first].push(v);
            }
        }
    }
    groups
}

/// Outcome of the truncated orbit integral `∫_0^horizon ||e^{tA} x|| dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatkoIntegral {
    pub value: f64,
    /// True when the growth bound makes the improper integral finite and the
    /// tail beyond the horizon is below `1e-6` of the value.
    pub converged: bool,
    /// Bound on `∫_horizon^∞ ||e^{tA} x|| dt`, when the tail is integrable.
    pub tail_bound: Option<f64>,
}

pub fn datko_l1_norm(a: &Matrix, x: &Matrix, horizon: f64) -> Result<DatkoIntegral> {
    check_state(a, x)?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut failure = None;
    let mut integrand = |t: f64| match expm(a, t) {
        Ok(e) => (&e * x).frobenius(),
        Err(err) => {
            failure.get_or_insert(err);
            0.0
        }
    };
    let (value, _) = adaptive_integrate(&mut integrand, 0.0, horizon, 1e-10, 40);
    if let Some(err) = failure {
        return Err(err);
    }

    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Ok(DatkoIntegral {
            value,
            converged: false,
            tail_bound: None,
        });
    }
    let bound = growth_bound(a, 0.1 * abscissa.abs(), horizon)?;
    let at_horizon = (&expm(a, horizon)? * x).frobenius();
    let tail = bound.m * at_horizon / bound.omega.abs();
    Ok(DatkoIntegral {
        value,
        converged: tail == 0.0 || tail < 1e-6 * value,
        tail_bound: Some(tail),
    })
}

pub const DEFAULT_SECTOR_CONSTANT: f64 = 50.0;
pub const DEFAULT_SECTOR_TOLERANCE: f64 = 1e-3;

/// Numerical analyticity angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    /// Largest angle (radians) found admissible; zero when even the
    /// imaginary axis violates the resolvent bound.
    pub angle: f64,
    /// Shift `s` applied as `A - s I` when `A` was not stable.
    pub shift: f64,
    pub constant: f64,
}

pub fn sector_angle_estimate(a: &Matrix, rays: usize) -> Result<SectorEstimate> {
    sector_angle_estimate_with(a, rays, DEFAULT_SECTOR_CONSTANT, DEFAULT_SECTOR_TOLERANCE)
}

/// Bisects for the largest `theta` such that `||λ (λ - A)^{-1}||` stays below
/// `constant` on `rays` log-spaced samples of each ray
/// `arg λ = ±(π/2 + θ')`, `0 <= θ' <= θ`.
pub fn sector_angle_estimate_with(
    a: &Matrix,
    rays: usize,
    constant: f64,
    tol: f64,
) -> Result<SectorEstimate> {
    let n = a.ensure_square()?;
    if rays < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples per ray".into(),
        ));
    }
    let abscissa = spectral_abscissa(a)?;
    let shift = if abscissa >= 0.0 { abscissa + 1.0 } else { 0.0 };
    let op = a.shift(-shift);
    let radius = operator_norm(&op).max(1e-12);
    let (r_min, r_max) = (1e-3 * radius, 1e3 * radius);
    let ratio = (r_max / r_min).powf(1.0 / (rays - 1) as f64);
    let eye = Matrix::identity(n);

    let ray_sup = |theta: f64| -> f64 {
        let mut sup: f64 = 0.0;
        for sign in [1.0, -1.0] {
            let arg = sign * (std::f64::consts::FRAC_PI_2 + theta);
            let dir = C64::from_polar(1.0, arg);
            let mut r = r_min;
            for _ in 0..rays {
                let lambda = dir * r;
                let shifted = &eye.scale_complex(lambda) - &op;
                let value = match solve(&shifted, &eye) {
                    Ok(res) => operator_norm(&res) * r,
                    Err(_) => f64::INFINITY,
                };
                sup = sup.max(value);
                r *= ratio;
            }
        }
        sup
    };
    let admissible =
        |theta: f64| -> bool { (1..=4).all(|j| ray_sup(theta * j as f64 / 4.0) <= constant) };

    if ray_sup(0.0) > constant {
        return Ok(SectorEstimate {
            angle: 0.0,
            shift,
            constant,
        });
    }
    let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SectorEstimate {
        angle: lo,
        shift,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn growth_bound_scalar_and_normal() {
        let gb = growth_bound(&Matrix::scalar(-1.0), 1e-6, 10.0).unwrap();
        assert_eq!(gb.m, 1.0);
        assert!((gb.omega - (-1.0 + 1e-6)).abs() < 1e-15);
        assert!(gb.samples >= 200);
        let gb = growth_bound(&Matrix::real_diag(&[-1.0, -2.0]), 1e-3, 10.0).unwrap();
        assert_eq!(gb.m, 1.0);
        assert!((gb.omega - (-1.0 + 1e-3)).abs() < 1e-14);
    }

    #[test]
    fn growth_bound_rejects_bad_input() {
        let a = Matrix::scalar(-1.0);
        assert!(growth_bound(&a, 0.0, 1.0).is_err());
        assert!(growth_bound(&a, 0.1, -1.0).is_err());
        assert!(growth_bound(&Matrix::zeros(1, 2), 0.1, 1.0).is_err());
    }

    #[test]
    fn orbit_examples() {
        let rot = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let c = classify_orbit(&rot, &Matrix::column(&[1.0, 0.0]), 10.0).unwrap();
        assert_eq!(c.kind, OrbitKind::BoundedNonconvergent);
        assert!(c.limit.is_none());

        let a = Matrix::real_diag(&[0.0, -1.0]);
        let c = classify_orbit(&a, &Matrix::column(&[1.0, 1.0]), 40.0).unwrap();
        assert_eq!(c.kind, OrbitKind::ConvergentNonzero);
        let limit = c.limit.unwrap();
        assert!((&limit - &Matrix::column(&[1.0, 0.0])).max_abs() < 1e-12);
        assert!(c.horizon_residual.unwrap() < 1e-12);

        let jordan = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let c = classify_orbit(&jordan, &Matrix::column(&[0.0, 1.0]), 10.0).unwrap();
        assert_eq!(c.kind, OrbitKind::Unbounded);
        // the eigenvector itself is a fixed point
        let c = classify_orbit(&jordan, &Matrix::column(&[1.0, 0.0]), 10.0).unwrap();
        assert_eq!(c.kind, OrbitKind::ConvergentNonzero);
    }

    #[test]
    fn zero_state_always_decays() {
        for a in [
            m(&[&[0.0, 1.0], &[0.0, 0.0]]),
            m(&[&[2.0, 0.0], &[0.0, 3.0]]),
            m(&[&[0.0, 1.0], &[-1.0, 0.0]]),
        ] {
            let c = classify_orbit(&a, &Matrix::zeros(2, 1), 5.0).unwrap();
            assert_eq!(c.kind, OrbitKind::Decaying);
            assert!(c.limit.unwrap().is_zero());
        }
    }

    #[test]
    fn growing_mode_is_unbounded() {
        let a = m(&[&[0.5, 0.0], &[1.0, -1.0]]);
        let c = classify_orbit(&a, &Matrix::column(&[1.0, 0.0]), 5.0).unwrap();
        assert_eq!(c.kind, OrbitKind::Unbounded);
        // second coordinate lies in the stable eigenspace
        let c = classify_orbit(&a, &Matrix::column(&[0.0, 1.0]), 5.0).unwrap();
        assert_eq!(c.kind, OrbitKind::Decaying);
    }

    #[test]
    fn datko_examples() {
        let d = datko_l1_norm(&Matrix::scalar(-1.0), &Matrix::scalar(1.0), 40.0).unwrap();
        assert!((d.value - 1.0).abs() < 1e-9);
        assert!(d.converged);
        let d = datko_l1_norm(&Matrix::scalar(0.0), &Matrix::scalar(1.0), 40.0).unwrap();
        assert!(!d.converged);
        assert!((d.value - 40.0).abs() < 1e-9);
    }

    #[test]
    fn sector_angle_self_adjoint() {
        let s = sector_angle_estimate(&Matrix::scalar(-1.0), 400).unwrap();
        // exact admissible angle is acos(1/50)
        assert!(
            (s.angle - std::f64::consts::FRAC_PI_2).abs() < 0.03,
            "{s:?}"
        );
        assert!(s.angle >= (1.0f64 / 50.0).acos() - 2e-3);
        assert_eq!(s.shift, 0.0);
        let s = sector_angle_estimate(&Matrix::real_diag(&[-1.0, -4.0]), 400).unwrap();
        assert!((s.angle - std::f64::consts::FRAC_PI_2).abs() < 0.03);
    }

    #[test]
    fn sector_angle_shifts_unstable_input() {
        let s = sector_angle_estimate(&Matrix::real_diag(&[1.0, -1.0]), 200).unwrap();
        assert!((s.shift - 2.0).abs() < 1e-12);
        assert!(s.angle > 1.4);
    }
}
