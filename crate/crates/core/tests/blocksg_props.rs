mod common;

use common::{grid, random_lower_triangular, random_matrix, random_stable, rng};
use opmat::blocksg::{
    closed_form_r, convolve, convolve_with_panels, scalar_convolution, verify_semigroup_blocks,
    young_bounds, BlockSystem,
};
use opmat::matcore::{eigenvalues, expm, operator_norm, spectral_abscissa};
use opmat::semigroup::growth_bound;
use opmat::Matrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn young_sup_bound_is_sound() {
    let mut rng = rng(21);
    for case in 0..100 {
        let sys = random_lower_triangular(&mut rng, 3, 3);
        let ga = growth_bound(&sys.a, 1e-3, 20.0).unwrap();
        let gd = growth_bound(&sys.d, 1e-3, 20.0).unwrap();
        let y = young_bounds(
            ga.m,
            ga.omega,
            gd.m,
            operator_norm(&sys.c),
            false,
            Some(gd.omega),
        )
        .unwrap();
        let x = random_matrix(&mut rng, sys.n(), 1, 1.0);
        for t in grid(20.0, 21) {
            let r = convolve(&sys.d, &sys.a, &sys.c, t, 1e-10).unwrap();
            let lhs = (&r.value * &x).frobenius();
            assert!(
                lhs <= y.sup_bound * x.frobenius() * (1.0 + 1e-6),
                "case {case}, t = {t}: {lhs} > {}",
                y.sup_bound * x.frobenius()
            );
        }
    }
}

#[test]
fn young_same_rate_bound_is_sound() {
    let mut rng = rng(22);
    for case in 0..40 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let a = random_stable(&mut rng, n);
        let d = random_stable(&mut rng, m);
        // force both abscissas to -0.5
        let a = a.shift(-0.5 - spectral_abscissa(&a).unwrap());
        let d = d.shift(-0.5 - spectral_abscissa(&d).unwrap());
        let c = random_matrix(&mut rng, m, n, 1.0);
        let ga = growth_bound(&a, 1e-3, 30.0).unwrap();
        let gd = growth_bound(&d, 1e-3, 30.0).unwrap();
        assert!((ga.omega - gd.omega).abs() < 1e-12);
        let y = young_bounds(ga.m, ga.omega, gd.m, operator_norm(&c), true, None).unwrap();
        for t in grid(30.0, 31) {
            let r = convolve(&d, &a, &c, t, 1e-10).unwrap();
            assert!(
                operator_norm(&r.value) <= y.sup_bound * (1.0 + 1e-6),
                "case {case}, t = {t}"
            );
        }
    }
}

#[test]
fn lower_triangular_exponential_stays_triangular() {
    let mut rng = rng(23);
    for _ in 0..20 {
        let sys = random_lower_triangular(&mut rng, 4, 4);
        let (n, m) = (sys.n(), sys.m());
        for t in [0.1, 1.0, 3.0, 10.0] {
            let e = expm(&sys.assemble(), t).unwrap();
            assert!(operator_norm(&e.block(0, n, n, m)) <= 1e-12);
        }
    }
}

#[test]
fn block_residual_decreases_under_panel_doubling() {
    let mut rng = rng(24);
    for _ in 0..10 {
        let sys = random_lower_triangular(&mut rng, 3, 3);
        let t = 3.0;
        let full = expm(&sys.assemble(), t).unwrap();
        let exact = full.block(sys.n(), 0, sys.m(), sys.n());
        let mut last = f64::INFINITY;
        for panels in [1, 2, 4, 8, 16] {
            let r = convolve_with_panels(&sys.d, &sys.a, &sys.c, t, panels).unwrap();
            let residual = operator_norm(&(&r - &exact));
            assert!(
                residual <= 2.0 * last || residual < 1e-13,
                "{residual} after {last}"
            );
            last = residual;
        }
        assert!(last < 1e-12);
    }
}

#[test]
fn zero_interior_generator_is_not_exponentially_stable() {
    let mut rng = rng(25);
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let d = random_stable(&mut rng, m);
        let c = random_matrix(&mut rng, m, n, 1.0);
        let sys = BlockSystem::new(Matrix::zeros(n, n), Matrix::zeros(n, m), c, d).unwrap();
        assert!(spectral_abscissa(&sys.assemble()).unwrap().abs() < 1e-10);
    }
}

#[test]
fn block_diagonal_spectrum_is_union() {
    let sys = BlockSystem::new(
        Matrix::real_diag(&[-1.0, -3.0]),
        Matrix::zeros(2, 1),
        Matrix::zeros(1, 2),
        Matrix::scalar(-2.0),
    )
    .unwrap();
    let ev: Vec<f64> = eigenvalues(&sys.assemble())
        .unwrap()
        .iter()
        .map(|z| z.re)
        .collect();
    assert_eq!(ev, vec![-1.0, -2.0, -3.0]);
    assert!(verify_semigroup_blocks(&sys, 2.0, 1e-12).unwrap().residual < 1e-12);
    let zero = BlockSystem::new(
        Matrix::zeros(2, 2),
        Matrix::zeros(2, 1),
        Matrix::zeros(1, 2),
        Matrix::zeros(1, 1),
    )
    .unwrap();
    assert!(zero.assemble().is_zero());
}

#[test]
fn closed_form_matches_quadrature() {
    let mut rng = rng(26);
    for _ in 0..10 {
        let m = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=3);
        let d = random_stable(&mut rng, m);
        let c = random_matrix(&mut rng, m, n, 1.0);
        let sys = BlockSystem::new(Matrix::zeros(n, n), Matrix::zeros(n, m), c, d).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let q = convolve(&sys.d, &sys.a, &sys.c, t, 1e-12).unwrap();
            let cf = closed_form_r(&sys, t).unwrap();
            assert!(operator_norm(&(&q.value - &cf)) < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_convolution_matches_quadrature(
        a in -2.0f64..0.5,
        d in -2.0f64..0.5,
        c in -3.0f64..3.0,
        t in 0.0f64..5.0,
    ) {
        let q = convolve(&Matrix::scalar(d), &Matrix::scalar(a), &Matrix::scalar(c), t, 1e-12)
            .unwrap();
        let exact = scalar_convolution(d, a, c, t);
        prop_assert!((q.value.re(0, 0) - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
    }

    #[test]
    fn assemble_has_combined_shape(n in 1usize..5, m in 1usize..5) {
        let sys = BlockSystem::new(
            Matrix::zeros(n, n),
            Matrix::zeros(n, m),
            Matrix::zeros(m, n),
            Matrix::zeros(m, m),
        )
        .unwrap();
        prop_assert_eq!(sys.assemble().shape(), (n + m, n + m));
    }
}
