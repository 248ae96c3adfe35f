//! Co-regularized spectral clustering.
//!
//! Maximizes
//!
//! ```text
//! sum_l tr(U_l' A_l U_l) + gamma_l tr(U_l U_l' U* U*')
//! ```
//!
//! over `n x 2` orthonormal `U_1..U_L, U*` by alternating exact updates: each
//! `U_l` is the top-2 eigenspace of `A_l + gamma_l U* U*'` and `U*` the top-2
//! eigenspace of `sum_l gamma_l U_l U_l'`. The global estimate clusters the
//! rows of `U*`. Clustering the rows of each `U_l` for layer estimates is an
//! extension; the method itself only targets the consensus partition.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::model::{Assignment, MultilayerGraph};
use crate::refine::DetectionResult;
use crate::spectral::eigen::{spectral_norm, top_eigenpairs, EigenOptions, SymOperator, Which};
use crate::spectral::kmeans::approx_kmeans2;
use crate::spectral::{uniform_weights, weighted_adjacency, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// `gamma_l = |A_l|_2`.
    SpectralNorm,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoRegConfig {
    pub max_iters: usize,
    pub gamma_mode: GammaMode,
    /// Stop once an iteration improves the objective by less than this
    /// fraction.
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
}

impl Default for CoRegConfig {
    fn default() -> Self {
        CoRegConfig {
            max_iters: 20,
            gamma_mode: GammaMode::SpectralNorm,
            rel_tol: 1e-8,
            restarts: 10,
            seed: 0,
            eigen_tol: 1e-8,
            eigen_max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoRegOutput {
    /// `per_node_scores` is empty: the method has no node-level objective.
    pub result: DetectionResult,
    /// Objective after initialization and after each iteration.
    pub objectives: Vec<f64>,
    pub gammas: Vec<f64>,
    pub u_star: DMatrix<f64>,
    pub u_layers: Vec<DMatrix<f64>>,
}

/// `A + gamma U U'`.
struct LowRankUpdate<'a> {
    base: &'a SymMatrix,
    gamma: f64,
    u: &'a DMatrix<f64>,
}

impl SymOperator for LowRankUpdate<'_> {
    fn dim(&self) -> usize {
        self.base.n()
    }

    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        self.base.apply(x, out);
        let proj = self.u.transpose() * x;
        out.gemm(self.gamma, self.u, &proj, 1.0);
    }

    fn frobenius_norm(&self) -> f64 {
        let mut au = DMatrix::zeros(self.u.nrows(), self.u.ncols());
        self.base.apply(self.u, &mut au);
        let cross = self.u.dot(&au);
        let gram = (self.u.transpose() * self.u).norm_squared();
        (self.base.frobenius_norm().powi(2) + 2.0 * self.gamma * cross + self.gamma.powi(2) * gram).max(0.0).sqrt()
    }

    fn norm_bound(&self) -> f64 {
        self.base.norm_bound() + self.gamma.abs() * self.u.norm_squared()
    }
}

/// `V V'`.
struct Gram<'a> {
    v: &'a DMatrix<f64>,
}

impl SymOperator for Gram<'_> {
    fn dim(&self) -> usize {
        self.v.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let proj = self.v.transpose() * x;
        self.v.mul_to(&proj, out);
    }

    fn frobenius_norm(&self) -> f64 {
        (self.v.transpose() * self.v).norm()
    }

    fn norm_bound(&self) -> f64 {
        self.v.norm_squared()
    }
}

fn layer_matrices(graph: &MultilayerGraph) -> Result<Vec<SymMatrix>> {
    let one = uniform_weights(1)?;
    graph
        .layers()
        .iter()
        .map(|layer| {
            let single = MultilayerGraph::new(graph.n(), vec![layer.clone()])?;
            weighted_adjacency(&single, &one)
        })
        .collect()
}

fn objective(mats: &[SymMatrix], gammas: &[f64], u_layers: &[DMatrix<f64>], u_star: &DMatrix<f64>) -> f64 {
    mats.iter()
        .zip(gammas)
        .zip(u_layers)
        .map(|((a, &g), u)| {
            let mut au = DMatrix::zeros(u.nrows(), u.ncols());
            a.apply(u, &mut au);
            u.dot(&au) + g * (u.transpose() * u_star).norm_squared()
        })
        .sum()
}

pub fn coreg_cluster(graph: &MultilayerGraph, config: &CoRegConfig) -> Result<CoRegOutput> {
    if config.max_iters == 0 {
        return param_err("co-regularization needs max_iters >= 1");
    }
    let n = graph.n();
    if n < 3 {
        return param_err("co-regularization needs at least three nodes");
    }
    let opts = EigenOptions {
        tol: config.eigen_tol,
        max_iter: config.eigen_max_iter,
        seed: config.seed,
        ..Default::default()
    };
    let mats = layer_matrices(graph)?;
    let gammas: Vec<f64> = match config.gamma_mode {
        GammaMode::Fixed(g) => vec![g; mats.len()],
        GammaMode::SpectralNorm => mats
            .par_iter()
            .map(|a| spectral_norm(a, &opts))
            .collect::<Result<_>>()?,
    };

    let top2 = |op: &dyn SymOperator, start: Option<&DMatrix<f64>>| -> Result<DMatrix<f64>> {
        Ok(top_eigenpairs(op, 2, Which::LargestAlgebraic, &opts, start)?.vectors)
    };
    let consensus = |u_layers: &[DMatrix<f64>], start: Option<&DMatrix<f64>>| -> Result<DMatrix<f64>> {
        let mut v = DMatrix::zeros(n, 2 * u_layers.len());
        for (l, (u, g)) in u_layers.iter().zip(&gammas).enumerate() {
            v.columns_mut(2 * l, 2).copy_from(&(u * g.sqrt()));
        }
        top2(&Gram { v: &v }, start)
    };

    let mut u_layers: Vec<DMatrix<f64>> = mats.par_iter().map(|a| top2(a, None)).collect::<Result<_>>()?;
    let mut u_star = consensus(&u_layers, None)?;
    let mut objectives = vec![objective(&mats, &gammas, &u_layers, &u_star)];
    for _ in 0..config.max_iters {
        u_layers = mats
            .par_iter()
            .zip(&gammas)
            .zip(&u_layers)
            .map(|((a, &gamma), prev)| top2(&LowRankUpdate { base: a, gamma, u: &u_star }, Some(prev)))
            .collect::<Result<_>>()?;
        u_star = consensus(&u_layers, Some(&u_star))?;
        let obj = objective(&mats, &gammas, &u_layers, &u_star);
        let prev = *objectives.last().unwrap();
        objectives.push(obj);
        if obj - prev < config.rel_tol * prev.abs() {
            break;
        }
    }

    let cluster = |u: &DMatrix<f64>| -> Result<Assignment> {
        let rows: Vec<[f64; 2]> = (0..n).map(|i| [u[(i, 0)], u[(i, 1)]]).collect();
        Ok(approx_kmeans2(&rows, 0.0, config.restarts, config.seed)?.assignment)
    };
    let z_star_hat = cluster(&u_star)?;
    let z_layer_hat = u_layers.iter().map(cluster).collect::<Result<_>>()?;
    Ok(CoRegOutput {
        result: DetectionResult {
            z_star_hat,
            z_layer_hat,
            per_node_scores: DMatrix::zeros(0, 0),
            aligned: true,
            unaligned_nodes: Vec::new(),
        },
        objectives,
        gammas,
        u_star,
        u_layers,
    })
}
