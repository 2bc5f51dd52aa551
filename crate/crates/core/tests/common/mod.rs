#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use sparsecert::numerics::{Dictionary, Matrix};
use sparsecert::sparse_model::stream_rng;

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, 7);
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_col_major(rows, cols, data).unwrap()
}

pub fn gaussian_dictionary(n: usize, m: usize, seed: u64) -> Dictionary {
    Dictionary::normalize(gaussian_matrix(n, m, seed)).unwrap()
}

pub fn gaussian_vector(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub struct Instance {
    pub a: Dictionary,
    pub y: Vec<f64>,
    pub epsilon: f64,
}

/// Small random BPDN instance: `n ≤ 6`, `m ≤ 10`, `y = Ax⁰ + noise`,
/// `ε` uniform in `[0.05, 0.5]·‖y‖₂`.
pub fn small_instance(k: u64) -> Instance {
    let mut rng = stream_rng(0x5eed ^ k, 3);
    let n = rng.random_range(2..=6);
    let m = rng.random_range(n + 1..=10);
    let a = gaussian_dictionary(n, m, k);
    let p = rng.random_range(1..=n.min(3));
    let x0 = sparsecert::sparse_model::sample_generic_p_sparse(
        m,
        p,
        sparsecert::sparse_model::MagnitudeRule::log_uniform_default(),
        &mut rng,
    )
    .unwrap();
    let noise = gaussian_vector(n, k, 4);
    let y: Vec<f64> = a.apply(&x0.to_dense()).iter().zip(&noise).map(|(u, v)| u + 0.1 * v).collect();
    let frac = rng.random_range(0.05..=0.5);
    let epsilon = frac * sparsecert::numerics::norm2(&y);
    Instance { a, y, epsilon }
}
