#![allow(dead_code)]

use opmat::blocksg::BlockSystem;
use opmat::matcore::spectral_abscissa;
use opmat::Matrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    Matrix::from_real_slice(rows, cols, &data).unwrap()
}

/// Random matrix shifted so that its spectral abscissa is in `[-1, -0.1]`.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n, 1.0);
    let target = -rng.gen_range(0.1..1.0);
    let alpha = spectral_abscissa(&a).unwrap();
    a.shift(target - alpha)
}

pub fn random_lower_triangular(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> BlockSystem {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let a = random_stable(rng, n);
    let d = random_stable(rng, m);
    let c = random_matrix(rng, m, n, 1.0);
    BlockSystem::new(a, Matrix::zeros(n, m), c, d).unwrap()
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    // QR of a random square matrix
    let a = random_matrix(rng, n, n, 1.0);
    let q = a.inner().clone().qr().q();
    Matrix::new(q).unwrap()
}

/// Uniform grid of `count` points on `[0, horizon]`.
pub fn grid(horizon: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| horizon * i as f64 / (count - 1) as f64)
        .collect()
}
