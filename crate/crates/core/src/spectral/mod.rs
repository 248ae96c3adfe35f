//! Spectral initialization of the global assignment.
//!
//! The layers are summed with weights into one matrix, nodes of unusually
//! large weighted degree are zeroed out, and the rows of the two leading
//! eigenvectors are split into two groups by 2-means.

pub mod eigen;
pub mod kmeans;
pub mod sparse;

use nalgebra::DMatrix;

use crate::error::{param_err, Result};
use crate::model::{Assignment, MultilayerGraph};
pub use eigen::{top_eigenpairs, EigenOptions, EigenPairs, SymOperator, Which};
pub use kmeans::{approx_kmeans2, KMeansResult, Point};
pub use sparse::SymMatrix;

/// Positive layer weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Normalizes positive raw weights.
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return param_err("weight vector is empty");
        }
        if let Some(w) = raw.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return param_err(format!("layer weight {w} is not a positive finite number"));
        }
        let total: f64 = raw.iter().sum();
        Ok(WeightVector(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn uniform_weights(num_layers: usize) -> Result<WeightVector> {
    WeightVector::new(vec![1.0; num_layers])
}

fn check_positive(p_hat: &[f64]) -> Result<()> {
    match p_hat.iter().position(|&p| !(p > 0.0)) {
        Some(l) => param_err(format!("p_hat[{l}] = {} must be positive", p_hat[l])),
        None => Ok(()),
    }
}

/// Weights proportional to `1 / p_hat`.
pub fn variance_weights(p_hat: &[f64]) -> Result<WeightVector> {
    check_positive(p_hat)?;
    WeightVector::new(p_hat.iter().map(|p| 1.0 / p).collect())
}

/// Weights proportional to `1 / sqrt(p_hat)`.
pub fn stdev_weights(p_hat: &[f64]) -> Result<WeightVector> {
    check_positive(p_hat)?;
    WeightVector::new(p_hat.iter().map(|p| 1.0 / p.sqrt()).collect())
}

/// Named weighting schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Uniform,
    Variance,
    Stdev,
}

impl WeightScheme {
    pub fn weights(self, p_hat: &[f64]) -> Result<WeightVector> {
        match self {
            WeightScheme::Uniform => uniform_weights(p_hat.len()),
            WeightScheme::Variance => variance_weights(p_hat),
            WeightScheme::Stdev => stdev_weights(p_hat),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Variance => "variance",
            WeightScheme::Stdev => "stdev",
        }
    }
}

/// `sum_l omega_l A_l` as a sparse symmetric matrix.
pub fn weighted_adjacency(graph: &MultilayerGraph, omega: &WeightVector) -> Result<SymMatrix> {
    if omega.len() != graph.num_layers() {
        return param_err(format!(
            "{} weights for {} layers",
            omega.len(),
            graph.num_layers()
        ));
    }
    let n = graph.n();
    let mut acc = vec![0.0; n];
    let mut touched = Vec::new();
    let rows = (0..n)
        .map(|i| {
            for (layer, &w) in graph.layers().iter().zip(omega.as_slice()) {
                for &j in layer.neighbors(i) {
                    if acc[j as usize] == 0.0 {
                        touched.push(j);
                    }
                    acc[j as usize] += w;
                }
            }
            let row = touched.iter().map(|&j| (j, acc[j as usize])).collect();
            for &j in &touched {
                acc[j as usize] = 0.0;
            }
            touched.clear();
            row
        })
        .collect();
    Ok(SymMatrix::from_rows(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimReport {
    /// Nodes whose weighted degree exceeded the threshold, ascending.
    pub trimmed_nodes: Vec<usize>,
    pub threshold: f64,
    pub degrees: Vec<f64>,
}

/// Zeroes every row and column whose weighted degree exceeds
/// `gamma * n * sum_l omega_l p_l`, in a single pass.
pub fn trim(a_bar: &SymMatrix, omega: &WeightVector, p: &[f64], gamma: f64) -> Result<(SymMatrix, TrimReport)> {
    if !(gamma > 1.0) {
        return param_err(format!("trimming constant gamma = {gamma} must exceed 1"));
    }
    if p.len() != omega.len() {
        return param_err(format!("{} probabilities for {} weights", p.len(), omega.len()));
    }
    let n = a_bar.n();
    let mean: f64 = omega.as_slice().iter().zip(p).map(|(w, p)| w * p).sum();
    let threshold = gamma * n as f64 * mean;
    let degrees: Vec<f64> = (0..n).map(|i| a_bar.row_sum(i)).collect();
    let drop: Vec<bool> = degrees.iter().map(|&d| d > threshold).collect();
    let trimmed_nodes = (0..n).filter(|&i| drop[i]).collect::<Vec<_>>();
    let trimmed = if trimmed_nodes.is_empty() { a_bar.clone() } else { a_bar.zero_rows_cols(&drop) };
    Ok((trimmed, TrimReport { trimmed_nodes, threshold, degrees }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `n x 2`, orthonormal columns.
    pub u: DMatrix<f64>,
    pub eigenvalues: [f64; 2],
    pub iterations: usize,
    pub residual: f64,
}

impl SpectralEmbedding {
    pub fn rows(&self) -> Vec<Point> {
        (0..self.u.nrows()).map(|i| [self.u[(i, 0)], self.u[(i, 1)]]).collect()
    }
}

/// The two eigenpairs of largest absolute eigenvalue.
pub fn top2_eigenpairs(m: &dyn SymOperator, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralEmbedding> {
    let opts = EigenOptions { tol, max_iter, seed, ..Default::default() };
    top2_with_start(m, &opts, None)
}

fn top2_with_start(m: &dyn SymOperator, opts: &EigenOptions, start: Option<&DMatrix<f64>>) -> Result<SpectralEmbedding> {
    let pairs = top_eigenpairs(m, 2, Which::LargestMagnitude, opts, start)?;
    Ok(SpectralEmbedding {
        u: pairs.vectors,
        eigenvalues: [pairs.values[0], pairs.values[1]],
        iterations: pairs.iterations,
        residual: pairs.residual,
    })
}

/// Hyperparameters of the spectral initializer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    pub gamma: f64,
    /// Relative Lloyd stopping tolerance; 0 runs Lloyd to a fixed point.
    pub epsilon: f64,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { gamma: 5.0, epsilon: 0.0, restarts: 10, tol: 1e-8, max_iter: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub assignment: Assignment,
    /// The trimmed matrix was zero or all embedded points coincided; the
    /// assignment is then all `+1`.
    pub degenerate: bool,
    pub trim: TrimReport,
    pub embedding: Option<SpectralEmbedding>,
    pub kmeans: Option<KMeansResult>,
}

/// Trim, embed and cluster: the initial estimate of the global assignment.
pub fn spectral_initialize(
    graph: &MultilayerGraph,
    omega: &WeightVector,
    p: &[f64],
    config: &SpectralConfig,
) -> Result<SpectralInit> {
    let a_bar = weighted_adjacency(graph, omega)?;
    initialize_from_matrix(&a_bar, omega, p, config, None)
}

/// [`spectral_initialize`] on a precomputed weighted adjacency matrix,
/// optionally warm-starting the eigensolver.
pub fn initialize_from_matrix(
    a_bar: &SymMatrix,
    omega: &WeightVector,
    p: &[f64],
    config: &SpectralConfig,
    start: Option<&DMatrix<f64>>,
) -> Result<SpectralInit> {
    let (trimmed, report) = trim(a_bar, omega, p, config.gamma)?;
    let n = a_bar.n();
    if trimmed.nnz() == 0 || n < 2 {
        return Ok(SpectralInit {
            assignment: Assignment::constant(n, 1),
            degenerate: true,
            trim: report,
            embedding: None,
            kmeans: None,
        });
    }
    let opts = EigenOptions { tol: config.tol, max_iter: config.max_iter, seed: config.seed, ..Default::default() };
    let embedding = top2_with_start(&trimmed, &opts, start)?;
    let km = approx_kmeans2(&embedding.rows(), config.epsilon, config.restarts, config.seed)?;
    Ok(SpectralInit {
        assignment: km.assignment.clone(),
        degenerate: km.degenerate,
        trim: report,
        embedding: Some(embedding),
        kmeans: Some(km),
    })
}

/// Spectral initializations of the graph with one node removed.
///
/// The weighted adjacency matrix is built once; each leave-one-out problem
/// drops a row and column from it and warm-starts the eigensolver from the
/// full graph's embedding.
pub struct LeaveOneOutSpectral {
    a_bar: SymMatrix,
    omega: WeightVector,
    p: Vec<f64>,
    config: SpectralConfig,
    warm: Option<DMatrix<f64>>,
}

impl LeaveOneOutSpectral {
    pub fn new(graph: &MultilayerGraph, omega: &WeightVector, p: &[f64], config: &SpectralConfig) -> Result<Self> {
        let a_bar = weighted_adjacency(graph, omega)?;
        let full = initialize_from_matrix(&a_bar, omega, p, config, None)?;
        Ok(LeaveOneOutSpectral {
            a_bar,
            omega: omega.clone(),
            p: p.to_vec(),
            config: config.clone(),
            warm: full.embedding.map(|e| e.u),
        })
    }

    /// Initial assignment of the `n - 1` remaining nodes after removing `i`.
    pub fn init_without(&self, i: usize) -> Result<Assignment> {
        let sub = self.a_bar.without_node(i);
        let start = self.warm.as_ref().map(|u| u.clone().remove_row(i));
        Ok(initialize_from_matrix(&sub, &self.omega, &self.p, &self.config, start.as_ref())?.assignment)
    }
}
