//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13, selected from the 1-norm of the scaled input.

use nalgebra::{ComplexField, DMatrix};

use super::matrix::{Matrix, C64};
use crate::error::{Error, Result};

// Largest 1-norms for which the degree-m approximant reaches unit roundoff
// in double precision (Higham 2005, Table 2.3).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `e^{tA}` for square `A` and finite `t >= 0`.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    a.ensure_square()?;
    if !t.is_finite() {
        return Err(Error::NonFinite("time argument of expm"));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "expm requires t >= 0, got {t}"
        )));
    }
    Ok(exp_scaled(a, t))
}

/// `e^{tA}` for any finite real `t`, including negative times. Input must be
/// square; used where backward propagators of analytic families are needed.
pub(crate) fn exp_scaled(a: &Matrix, t: f64) -> Matrix {
    let n = a.rows();
    if t == 0.0 || a.is_zero() {
        return Matrix::identity(n);
    }
    let scaled = a.inner() * C64::new(t, 0.0);
    if n == 1 {
        return Matrix::from_inner(DMatrix::from_element(1, 1, scaled[(0, 0)].exp()));
    }
    if a.is_real() {
        // real arithmetic is four times cheaper and keeps the result real
        let out = pade_exp(scaled.map(|z| z.re));
        return Matrix::from_inner(out.map(|x| C64::new(x, 0.0)));
    }
    Matrix::from_inner(pade_exp(scaled))
}

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.clone().abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_exp<T: ComplexField<RealField = f64>>(a: DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    let norm = one_norm(&a);
    let c = |x: f64| T::from_real(x);

    let a2 = &a * &a;
    let (u, v, squarings) = if norm <= THETA_9 {
        let (b, powers): (&[f64], usize) = if norm <= THETA_3 {
            (&PADE_3, 1)
        } else if norm <= THETA_5 {
            (&PADE_5, 2)
        } else if norm <= THETA_7 {
            (&PADE_7, 3)
        } else {
            (&PADE_9, 4)
        };
        // even powers A^2, A^4, ... up to A^(2*powers)
        let mut even = vec![eye.clone(), a2.clone()];
        for k in 2..=powers {
            let next = &even[k - 1] * &a2;
            even.push(next);
        }
        let mut u_inner = DMatrix::<T>::zeros(n, n);
        let mut v = DMatrix::<T>::zeros(n, n);
        for (k, p) in even.iter().enumerate() {
            u_inner += p * c(b[2 * k + 1]);
            v += p * c(b[2 * k]);
        }
        (&a * u_inner, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let factor = c(0.5f64.powi(s));
        let a1 = &a * factor.clone();
        let a2 = &a2 * (factor.clone() * factor);
        let a4 = &a2 * &a2;
        let a6 = &a2 * &a4;
        let b = &PADE_13;
        let u_high = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
        let u_inner =
            &a6 * &u_high + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &eye * c(b[1]);
        let v_high = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
        let v = &a6 * &v_high + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &eye * c(b[0]);
        (&a1 * u_inner, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    // q is well conditioned for the selected degree; LU with partial pivoting
    let mut r = q.lu().solve(&p).unwrap_or_else(|| eye.clone());
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
