#![allow(clippy::needless_range_loop)]

mod common;

use common::{gaussian_dictionary, gaussian_matrix, gaussian_vector};
use proptest::prelude::*;
use sparsecert::numerics::{
    gram, norm1, norm2, norm_1_to_2, solve_spd, spectral_norm, Matrix, PowerIterationOptions, SubMatrix,
    SymmetricMatrix,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_symmetric_with_unit_diagonal(n in 2usize..12, extra in 1usize..12, seed in any::<u64>()) {
        let a = gaussian_dictionary(n, n + extra, seed);
        let k = (n + extra).min(5);
        let idx: Vec<usize> = (0..k).map(|i| i * (n + extra) / k).collect();
        let g = gram(&SubMatrix::new(&a, idx.clone()).unwrap());
        for i in 0..k {
            prop_assert!((g.get(i, i) - norm2(a.column(idx[i])).powi(2)).abs() <= 1e-12);
            for j in 0..k {
                prop_assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn coherence_in_unit_interval(n in 2usize..10, extra in 1usize..10, seed in any::<u64>()) {
        let mu = gaussian_dictionary(n, n + extra, seed).coherence().unwrap();
        prop_assert!((0.0..=1.0).contains(&mu));
    }

    #[test]
    fn solve_spd_small_residual(dim in 1usize..20, seed in any::<u64>()) {
        let b = gaussian_matrix(dim + 3, dim, seed);
        let g = SymmetricMatrix::from_matrix(matmul_tn(&b, &b)).unwrap().shifted(0.1);
        let rhs = gaussian_vector(dim, seed, 1);
        let z = solve_spd(&g, &rhs).unwrap();
        let gz = g.mul_vec(&z);
        let r: Vec<f64> = gz.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&r) / norm2(&rhs) <= 1e-10);
    }
}

fn matmul_tn(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.cols(), b.cols());
    for i in 0..a.cols() {
        for j in 0..b.cols() {
            out.set(i, j, a.column(i).iter().zip(b.column(j)).map(|(p, q)| p * q).sum());
        }
    }
    out
}

#[test]
fn spectral_norm_dominates_random_unit_vectors() {
    for seed in 0..5 {
        let b = gaussian_matrix(9, 14, seed);
        let s = spectral_norm(&b, PowerIterationOptions::default()).unwrap();
        for k in 0..100 {
            let mut x = gaussian_vector(14, seed, 100 + k);
            let nx = norm2(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            assert!(norm2(&b.mul_vec(&x)) <= s * (1.0 + 1e-9));
        }
    }
}

#[test]
fn norm_1_to_2_dominates_random_l1_unit_vectors() {
    for seed in 0..3 {
        let b = gaussian_matrix(6, 11, seed);
        let scan = norm_1_to_2(&b);
        for k in 0..1000 {
            let mut x = gaussian_vector(11, seed, 2000 + k);
            let nx = norm1(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            assert!(norm2(&b.mul_vec(&x)) <= scan * (1.0 + 1e-12));
        }
    }
}
