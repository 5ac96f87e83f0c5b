mod common;

use common::{random_matrix, random_stable, rng};
use opmat::blocksg::{convolve, BlockSystem};
use opmat::matcore::{expm, spectral_abscissa};
use opmat::stability::{
    asymptotic_limit_r, bpt_for_system, complete_for_system, nonresonance_check, sharper_witness,
};
use opmat::Matrix;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn satisfied_certificates_imply_stability() {
    let mut rng = rng(41);
    let (mut complete, mut bpt) = (0, 0);
    for case in 0..200 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let scale = rng.gen_range(0.01..0.5);
        let sys = BlockSystem::new(
            random_stable(&mut rng, n),
            random_matrix(&mut rng, n, m, scale),
            random_matrix(&mut rng, m, n, scale),
            random_stable(&mut rng, m),
        )
        .unwrap();
        let alpha = spectral_abscissa(&sys.assemble()).unwrap();
        let c = complete_for_system(&sys, 1e-3, 20.0).unwrap();
        let b = bpt_for_system(&sys, 1e-3, 20.0).unwrap();
        if c.satisfied {
            complete += 1;
            assert!(
                alpha < 0.0,
                "case {case}: complete certificate but abscissa {alpha}"
            );
        }
        if b.satisfied {
            bpt += 1;
            assert!(
                alpha < 0.0,
                "case {case}: bpt certificate but abscissa {alpha}"
            );
            assert!(b.predicted_rate.unwrap() >= alpha - 1e-9);
        }
    }
    // the sample must actually exercise both criteria
    assert!(complete > 20 && bpt > 20, "complete {complete}, bpt {bpt}");
}

#[test]
fn sharper_witness_family() {
    let seeds = [
        (0.0, 0.0),
        (0.25, 0.5),
        (0.5, 0.99),
        (0.75, 0.1),
        (0.999, 0.999),
    ];
    for (u, v) in seeds {
        let sys = sharper_witness(u, v);
        let c = complete_for_system(&sys, 1e-9, 10.0).unwrap();
        let b = bpt_for_system(&sys, 1e-9, 10.0).unwrap();
        assert!(c.satisfied && !b.satisfied, "u = {u}, v = {v}");
        assert!(spectral_abscissa(&sys.assemble()).unwrap() < 0.0);
    }
}

#[test]
fn limit_discrepancy_decays_with_slowest_rate() {
    // distinct rates: A = diag(0, -2), D = (-1), slowest decaying rate -1
    let sys = BlockSystem::new(
        Matrix::real_diag(&[0.0, -2.0]),
        Matrix::zeros(2, 1),
        Matrix::from_real_rows(&[[1.0, 1.0]]).unwrap(),
        Matrix::scalar(-1.0),
    )
    .unwrap();
    let x = Matrix::column(&[2.0, 5.0]);
    let alpha: f64 = -1.0;
    for h in [3.0, 5.0, 8.0] {
        let near = asymptotic_limit_r(&sys, &x, h).unwrap();
        let far = asymptotic_limit_r(&sys, &x, 2.0 * h).unwrap();
        assert!((near.predicted.re(0, 0) - 2.0).abs() < 1e-12);
        assert!(
            far.discrepancy <= near.discrepancy * (alpha * h).exp() * 1.5,
            "h = {h}: {} vs {}",
            far.discrepancy,
            near.discrepancy
        );
    }
}

#[test]
fn resonant_rotation_grows_linearly() {
    let rot = Matrix::from_real_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
    let r = nonresonance_check(&rot, &rot, 1e-8).unwrap();
    assert!(!r.certificate.satisfied);
    for t in [1.0, 5.0, 20.0] {
        let conv = convolve(&rot, &rot, &Matrix::identity(2), t, 1e-10).unwrap();
        let exact = expm(&rot, t).unwrap().scale(t);
        assert!((&conv.value - &exact).max_abs() < 1e-9);
    }
}

fn rotation(freq: f64) -> Matrix {
    Matrix::from_real_rows(&[[0.0, freq], [-freq, 0.0]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonresonance_is_symmetric(
        fa in prop::sample::select(vec![0.0, 1.0, 2.0]),
        fd in prop::sample::select(vec![0.0, 1.0, 3.0]),
        shift_a in prop::sample::select(vec![0.0, -0.5]),
        shift_d in prop::sample::select(vec![0.0, -1.0]),
    ) {
        let a = rotation(fa).shift(shift_a);
        let d = rotation(fd).shift(shift_d);
        let ad = nonresonance_check(&a, &d, 1e-8).unwrap().certificate;
        let da = nonresonance_check(&d, &a, 1e-8).unwrap().certificate;
        prop_assert_eq!(ad.satisfied, da.satisfied);
        prop_assert_eq!(ad.margin, da.margin);
        let resonant = fa == fd && shift_a == 0.0 && shift_d == 0.0;
        prop_assert_eq!(ad.satisfied, !resonant);
    }
}
