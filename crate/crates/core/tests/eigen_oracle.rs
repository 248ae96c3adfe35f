//! Subspace iteration against a cyclic Jacobi eigensolver.

use imlsbm::spectral::eigen::spectral_norm;
use imlsbm::spectral::{top2_eigenpairs, top_eigenpairs, EigenOptions, SymMatrix, Which};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All eigenpairs of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&g + g.transpose()) * 0.5
}

/// Oracle pairs sorted by the selection order of `which`.
fn oracle(m: &DMatrix<f64>, which: Which) -> Vec<(f64, DVector<f64>)> {
    let (values, vectors) = jacobi(m.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> =
        values.iter().enumerate().map(|(i, &v)| (v, vectors.column(i).into_owned())).collect();
    match which {
        Which::LargestAlgebraic => pairs.sort_by(|a, b| b.0.total_cmp(&a.0)),
        Which::LargestMagnitude => pairs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs())),
    }
    pairs
}

#[test]
fn jacobi_oracle_reconstructs_its_input() {
    let m = random_symmetric(12, 3);
    let (values, v) = jacobi(m.clone());
    let rebuilt = &v * DMatrix::from_diagonal(&DVector::from_vec(values)) * v.transpose();
    assert!((rebuilt - m).norm() < 1e-12);
}

#[test]
fn random_50x50_matches_jacobi() {
    for (seed, which) in [(11, Which::LargestMagnitude), (12, Which::LargestAlgebraic), (13, Which::LargestMagnitude)] {
        let m = random_symmetric(50, seed);
        let expected = oracle(&m, which);
        let op = SymMatrix::from_dense(&m);
        let opts = EigenOptions { tol: 1e-12, seed, ..Default::default() };
        let got = top_eigenpairs(&op, 3, which, &opts, None).unwrap();
        for j in 0..3 {
            let (value, vector) = &expected[j];
            assert!((got.values[j] - value).abs() < 1e-8, "{which:?} value {j}: {} vs {value}", got.values[j]);
            let overlap = got.vectors.column(j).dot(vector).abs();
            assert!((overlap - 1.0).abs() < 1e-8, "{which:?} vector {j}: |<u, v>| = {overlap}");
        }
    }
}

#[test]
fn top2_matches_jacobi_on_a_block_model_matrix() {
    // Two blocks of 30 with a weak perturbation.
    let n = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = DMatrix::from_fn(n, n, |i, j| if (i < 30) == (j < 30) { 0.6 } else { 0.1 });
    let noise = random_symmetric(n, 6) * 0.05;
    let m = m + noise + DMatrix::from_fn(n, n, |i, j| if i == j { rng.gen_range(0.0..0.01) } else { 0.0 });
    let m = (&m + m.transpose()) * 0.5;
    let expected = oracle(&m, Which::LargestMagnitude);
    let got = top2_eigenpairs(&SymMatrix::from_dense(&m), 1e-12, 10_000, 1).unwrap();
    for j in 0..2 {
        assert!((got.eigenvalues[j] - expected[j].0).abs() < 1e-8);
        assert!((got.u.column(j).dot(&expected[j].1).abs() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn spectral_norm_matches_jacobi() {
    for seed in 20..25 {
        let m = random_symmetric(40, seed);
        let (values, _) = jacobi(m.clone());
        let expected = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let opts = EigenOptions { tol: 1e-12, seed, ..Default::default() };
        let got = spectral_norm(&SymMatrix::from_dense(&m), &opts).unwrap();
        assert!((got - expected).abs() < 1e-8 * expected, "{got} vs {expected}");
    }
}
