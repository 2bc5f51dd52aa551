#![allow(clippy::needless_range_loop)]

mod common;

use common::gaussian_dictionary;
use sparsecert::certificates::{compute_certificate, is_subgradient};
use sparsecert::numerics::{gram, norm2, norm_inf, solve_spd, Dictionary, SubMatrix};
use sparsecert::sparse_model::{sample_generic_p_sparse, stream_rng, MagnitudeRule, SparseSignal};

fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[0][j] * det(&minor)
        })
        .sum()
}

/// Inverse by the adjugate, every cofactor expanded recursively.
fn cofactor_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let d = det(a);
    if n == 1 {
        return vec![vec![1.0 / d]];
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<f64>> = (0..n)
                .filter(|r| *r != i)
                .map(|r| (0..n).filter(|c| *c != j).map(|c| a[r][c]).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[j][i] = sign * det(&minor) / d;
        }
    }
    inv
}

fn signals(a: &Dictionary, p: usize, count: u64) -> Vec<SparseSignal> {
    (0..count)
        .map(|k| sample_generic_p_sparse(a.m(), p, MagnitudeRule::log_uniform_default(), &mut stream_rng(k, 0)).unwrap())
        .collect()
}

#[test]
fn d_matches_cofactor_oracle() {
    let mut checked = 0;
    for n in 2..=5 {
        for m in n + 1..=8 {
            let a = gaussian_dictionary(n, m, (n * 10 + m) as u64);
            for p in 1..=n {
                for x in signals(&a, p, 4) {
                    let cert = compute_certificate(&a, &x).unwrap();
                    assert!(cert.invertible);
                    let sub = SubMatrix::new(&a, x.support().to_vec()).unwrap();
                    let g = gram(&sub);
                    let rows: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| g.get(i, j)).collect()).collect();
                    let inv = cofactor_inverse(&rows);
                    let sigma = x.support_signs();
                    let z: Vec<f64> = inv.iter().map(|r| r.iter().zip(&sigma).map(|(u, v)| u * v).sum()).collect();
                    let d = sub.apply(&z);
                    let err: Vec<f64> = d.iter().zip(&cert.d).map(|(u, v)| u - v).collect();
                    assert!(norm_inf(&err) <= 1e-9, "n={n} m={m} p={p}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn certificate_invariants_on_random_instances() {
    for seed in 0..20 {
        let a = gaussian_dictionary(20, 40, seed);
        for p in [1, 3, 6] {
            for x in signals(&a, p, 5) {
                let cert = compute_certificate(&a, &x).unwrap();
                assert!(cert.invertible);
                let sub = SubMatrix::new(&a, x.support().to_vec()).unwrap();
                let sigma = x.support_signs();
                // defining system
                let lhs = sub.apply_transpose(&cert.d);
                let err: Vec<f64> = lhs.iter().zip(&sigma).map(|(u, v)| u - v).collect();
                assert!(norm_inf(&err) <= 1e-10);
                // d in the span of A_I
                let z = solve_spd(&gram(&sub), &lhs).unwrap();
                let proj = sub.apply(&z);
                let r: Vec<f64> = cert.d.iter().zip(&proj).map(|(u, v)| u - v).collect();
                assert!(norm2(&r) <= 1e-9);
                assert!(cert.d_norm * cert.d_norm <= cert.gram_inv_spectral * p as f64 * (1.0 + 1e-9));
                if cert.ic < 1.0 {
                    assert!(is_subgradient(&cert.s, &x.to_dense()).unwrap());
                }
            }
        }
    }
}
