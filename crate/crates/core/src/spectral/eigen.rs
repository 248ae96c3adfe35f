//! Leading eigenpairs of symmetric operators by subspace iteration.
//!
//! Each sweep applies a Chebyshev polynomial filter to an oversampled block,
//! re-orthonormalizes it and extracts Ritz pairs with a dense Rayleigh–Ritz
//! step. The filter damps the part of the spectrum the current block already
//! identifies as unwanted, which matters for sparse random graphs whose
//! informative eigenvalues sit just outside a wide noise bulk.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{param_err, Error, Result};
use crate::rng::{self, StreamRng};

/// A real symmetric linear map applied to blocks of column vectors.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;
    /// `out = M x`; `out` has the shape of `x`.
    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>);
    fn frobenius_norm(&self) -> f64;
    /// Any upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        self.mul_to(x, out);
    }

    fn frobenius_norm(&self) -> f64 {
        self.norm()
    }

    fn norm_bound(&self) -> f64 {
        self.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// Which end of the spectrum to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    LargestMagnitude,
    LargestAlgebraic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Converged when every wanted residual `|Mu - lambda u|` is at most
    /// `tol * |M|_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra block columns beyond the number of wanted pairs.
    pub oversample: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-8, max_iter: 10_000, oversample: 6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    /// Wanted eigenvalues in selection order.
    pub values: Vec<f64>,
    /// Matching orthonormal eigenvectors as columns. Each column's
    /// largest-magnitude entry (first on ties) is positive.
    pub vectors: DMatrix<f64>,
    pub iterations: usize,
    /// Largest residual norm among the wanted pairs.
    pub residual: f64,
}

const MAX_DEGREE: usize = 16;
/// Cap on the filter's gain so the smallest wanted direction keeps about
/// eight significant digits relative to the largest.
const MAX_GAIN: f64 = 1e8;

/// The `k` eigenpairs of `op` that come first under `which`.
///
/// `start` optionally seeds the leading block columns, e.g. with the
/// solution of a nearby problem; the rest are random.
pub fn top_eigenpairs(
    op: &dyn SymOperator,
    k: usize,
    which: Which,
    opts: &EigenOptions,
    start: Option<&DMatrix<f64>>,
) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return param_err(format!("cannot extract {k} eigenpairs of a {n}x{n} operator"));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return param_err("eigensolver needs tol > 0 and max_iter >= 1");
    }
    if let Some(s) = start {
        if s.nrows() != n {
            return param_err(format!("start block has {} rows, expected {n}", s.nrows()));
        }
    }
    let mut rng = rng::substream(opts.seed, rng::tag::EIGEN, 0);
    let b = (k + opts.oversample).min(n);
    if b == n {
        return dense_eigenpairs(op, k, which);
    }

    let fro = op.frobenius_norm();
    let bound = op.norm_bound();
    let mut x = DMatrix::zeros(n, b);
    for j in 0..b {
        match start {
            Some(s) if j < s.ncols() => x.set_column(j, &s.column(j)),
            _ => fill_random(&mut x, j, &mut rng),
        }
    }
    orthonormalize(&mut x, &mut rng);
    if fro == 0.0 {
        return Ok(finish(x, vec![0.0; b], k, 0, 0.0));
    }

    let mut ax = DMatrix::zeros(n, b);
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        op.apply(&x, &mut ax);
        let (theta, w) = rayleigh_ritz(&x, &ax, which);
        x = &x * &w;
        ax = &ax * &w;
        residual = (0..k)
            .map(|j| (ax.column(j) - x.column(j) * theta[j]).norm())
            .fold(0.0, f64::max);
        // A random block can hold exact eigenvectors of a highly degenerate
        // small eigenvalue, which look converged before the wanted
        // directions have been amplified, so cold starts filter at least once.
        if residual <= opts.tol * fro && (iter > 1 || start.is_some()) {
            return Ok(finish(x, theta, k, iter, residual));
        }
        x = chebyshev_filter(op, &x, &ax, &theta, which, bound);
        orthonormalize(&mut x, &mut rng);
    }
    Err(Error::Convergence { iterations: opts.max_iter, residual })
}

/// `|M|_2` as the larger of `lambda_max(M)` and `lambda_max(-M)`.
///
/// Two algebraic solves stay reliable when `+lambda` and `-lambda` are both
/// highly degenerate, as for a layer made of a few disjoint edges, where a
/// single magnitude-ordered block cannot separate the two eigenspaces.
pub fn spectral_norm(op: &dyn SymOperator, opts: &EigenOptions) -> Result<f64> {
    let top = top_eigenpairs(op, 1, Which::LargestAlgebraic, opts, None)?.values[0];
    let bottom = top_eigenpairs(&Negated(op), 1, Which::LargestAlgebraic, opts, None)?.values[0];
    Ok(top.max(bottom).max(0.0))
}

struct Negated<'a>(&'a dyn SymOperator);

impl SymOperator for Negated<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        self.0.apply(x, out);
        out.neg_mut();
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    fn norm_bound(&self) -> f64 {
        self.0.norm_bound()
    }
}

/// Ritz values ordered by `which` and the matching rotation of the block.
fn rayleigh_ritz(x: &DMatrix<f64>, ax: &DMatrix<f64>, which: Which) -> (Vec<f64>, DMatrix<f64>) {
    let h = x.transpose() * ax;
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let order = selection_order(eig.eigenvalues.as_slice(), which);
    let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(x.ncols(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (theta, w)
}

fn selection_order(values: &[f64], which: Which) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    match which {
        Which::LargestMagnitude => order.sort_by(|&a, &b| {
            values[b].abs().total_cmp(&values[a].abs()).then(values[b].total_cmp(&values[a]))
        }),
        Which::LargestAlgebraic => order.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
    }
    order
}

/// Applies `T_d((M - c) / e)` to the block, where `[c - e, c + e]` covers the
/// unwanted part of the current Ritz spectrum. `ax` is `M x`.
fn chebyshev_filter(
    op: &dyn SymOperator,
    x: &DMatrix<f64>,
    ax: &DMatrix<f64>,
    theta: &[f64],
    which: Which,
    bound: f64,
) -> DMatrix<f64> {
    let last = theta[theta.len() - 1];
    let (c, e, lead) = match which {
        Which::LargestMagnitude => (0.0, last.abs(), theta[0].abs()),
        Which::LargestAlgebraic => {
            let lb = -bound;
            ((last + lb) / 2.0, (last - lb) / 2.0, theta[0])
        }
    };
    let ratio = if e > 1e-14 * bound { ((lead - c) / e).max(1.0) } else { 1.0 };
    if ((MAX_DEGREE as f64) * ratio.acosh()).cosh() < 2.0 {
        // The block sits inside one eigenvalue cluster, so the interval
        // gives no separation. A shifted power step still damps everything
        // below the lead.
        let shift = if which == Which::LargestAlgebraic { bound } else { 0.0 };
        return ax + x * shift;
    }
    let mut degree = 1;
    while degree < MAX_DEGREE && ((degree + 1) as f64 * ratio.acosh()).cosh() <= MAX_GAIN {
        degree += 1;
    }

    let mut prev = x.clone();
    let mut cur = (ax - x * c) / e;
    let mut scratch = DMatrix::zeros(x.nrows(), x.ncols());
    for _ in 1..degree {
        op.apply(&cur, &mut scratch);
        let next = (&scratch - &cur * c) * (2.0 / e) - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn fill_random(x: &mut DMatrix<f64>, j: usize, rng: &mut StreamRng) {
    for v in x.column_mut(j).iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
}

/// Classical Gram–Schmidt with one re-orthogonalization pass. Columns that
/// collapse numerically are replaced by random vectors.
fn orthonormalize(x: &mut DMatrix<f64>, rng: &mut StreamRng) {
    for j in 0..x.ncols() {
        let mut attempts = 0;
        loop {
            let before = x.column(j).norm();
            for _ in 0..2 {
                for i in 0..j {
                    let d = x.column(i).dot(&x.column(j));
                    let qi = x.column(i).clone_owned();
                    x.column_mut(j).axpy(-d, &qi, 1.0);
                }
            }
            let after = x.column(j).norm();
            if after > 1e-10 * before && after > f64::MIN_POSITIVE {
                x.column_mut(j).scale_mut(1.0 / after);
                break;
            }
            attempts += 1;
            assert!(attempts < 32, "cannot complete an orthonormal basis");
            fill_random(x, j, rng);
        }
    }
}

fn finish(x: DMatrix<f64>, theta: Vec<f64>, k: usize, iterations: usize, residual: f64) -> EigenPairs {
    let mut vectors = x.columns(0, k).clone_owned();
    for j in 0..k {
        canonical_sign(&mut vectors, j);
    }
    EigenPairs { values: theta[..k].to_vec(), vectors, iterations, residual }
}

fn canonical_sign(v: &mut DMatrix<f64>, j: usize) {
    let mut best = 0;
    for i in 0..v.nrows() {
        if v[(i, j)].abs() > v[(best, j)].abs() {
            best = i;
        }
    }
    if v[(best, j)] < 0.0 {
        v.column_mut(j).neg_mut();
    }
}

fn dense_eigenpairs(op: &dyn SymOperator, k: usize, which: Which) -> Result<EigenPairs> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    op.apply(&DMatrix::identity(n, n), &mut m);
    let m_sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m_sym);
    let order = selection_order(eig.eigenvalues.as_slice(), which);
    let x = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let residual = (0..k)
        .map(|j| (&m * x.column(j) - x.column(j) * theta[j]).norm())
        .fold(0.0, f64::max);
    Ok(finish(x, theta, k, 1, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
        (v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols())).abs().max()
    }

    #[test]
    fn diagonal_matrix() {
        let mut d = DMatrix::zeros(30, 30);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 1.0;
        for i in 2..30 {
            d[(i, i)] = 0.01 * i as f64 - 0.5;
        }
        let r = top_eigenpairs(&d, 2, Which::LargestMagnitude, &EigenOptions::default(), None).unwrap();
        assert!((r.values[0] - 3.0).abs() < 1e-10 && (r.values[1] - 1.0).abs() < 1e-10);
        assert!((r.vectors[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((r.vectors[(1, 1)] - 1.0).abs() < 1e-8);
        assert!(orthonormality_error(&r.vectors) < 1e-10);
    }

    #[test]
    fn rank_one() {
        let n = 40;
        let z = DMatrix::from_fn(n, 1, |i, _| if i % 3 == 0 { 1.0 } else { -0.5 });
        let m = &z * z.transpose();
        let r = top_eigenpairs(&m, 2, Which::LargestMagnitude, &EigenOptions::default(), None).unwrap();
        let zn = z.norm();
        assert!((r.values[0] - zn * zn).abs() < 1e-9 * zn * zn);
        assert!(r.values[1].abs() < 1e-8);
        let cos = (r.vectors.column(0).dot(&z.column(0)) / zn).abs();
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_vs_algebraic() {
        let mut d = DMatrix::zeros(20, 20);
        d[(0, 0)] = -5.0;
        d[(1, 1)] = 2.0;
        d[(2, 2)] = 1.0;
        let opts = EigenOptions::default();
        let mag = top_eigenpairs(&d, 2, Which::LargestMagnitude, &opts, None).unwrap();
        assert!((mag.values[0] + 5.0).abs() < 1e-10 && (mag.values[1] - 2.0).abs() < 1e-10);
        let alg = top_eigenpairs(&d, 2, Which::LargestAlgebraic, &opts, None).unwrap();
        assert!((alg.values[0] - 2.0).abs() < 1e-10 && (alg.values[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_with_degenerate_signed_pairs() {
        // Ten disjoint edges: eigenvalues +1 and -1 each with multiplicity ten.
        let mut a = DMatrix::zeros(60, 60);
        for e in 0..10 {
            a[(2 * e, 2 * e + 1)] = 1.0;
            a[(2 * e + 1, 2 * e)] = 1.0;
        }
        let norm = spectral_norm(&a, &EigenOptions::default()).unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
        let neg = -&a * 3.0 + DMatrix::identity(60, 60);
        assert!((spectral_norm(&neg, &EigenOptions::default()).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_and_small_dense_path() {
        let z = DMatrix::<f64>::zeros(25, 25);
        let r = top_eigenpairs(&z, 2, Which::LargestMagnitude, &EigenOptions::default(), None).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        assert!(orthonormality_error(&r.vectors) < 1e-12);

        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, -4.0]);
        let r = top_eigenpairs(&m, 2, Which::LargestMagnitude, &EigenOptions::default(), None).unwrap();
        assert!((r.values[0] + 4.0).abs() < 1e-12 && (r.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let m = DMatrix::from_fn(60, 60, |i, j| ((i * 7 + j * 7) % 11) as f64 - 5.0);
        let opts = EigenOptions { max_iter: 1, tol: 1e-14, ..Default::default() };
        match top_eigenpairs(&m, 2, Which::LargestMagnitude, &opts, None) {
            Err(Error::Convergence { iterations: 1, residual }) => assert!(residual > 0.0),
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_small_eigenvalue_does_not_stop_early() {
        // Two cliques: eigenvalue 99 twice and -1 with multiplicity 198.
        let m = DMatrix::from_fn(200, 200, |i, j| if i != j && (i < 100) == (j < 100) { 1.0 } else { 0.0 });
        for seed in 0..20 {
            let opts = EigenOptions { seed, ..Default::default() };
            let pairs = top_eigenpairs(&m, 2, Which::LargestMagnitude, &opts, None).unwrap();
            assert!(pairs.values.iter().all(|v| (v - 99.0).abs() < 1e-8), "seed {seed}: {:?}", pairs.values);
        }
    }

    #[test]
    fn warm_start_converges_immediately() {
        let m = DMatrix::from_fn(50, 50, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let opts = EigenOptions::default();
        let cold = top_eigenpairs(&m, 2, Which::LargestMagnitude, &opts, None).unwrap();
        let warm = top_eigenpairs(&m, 2, Which::LargestMagnitude, &opts, Some(&cold.vectors)).unwrap();
        assert!(warm.iterations <= cold.iterations);
        assert!((warm.values[0] - cold.values[0]).abs() < 1e-10);
    }
}
