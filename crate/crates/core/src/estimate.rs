//! Estimates of the per-layer connection probabilities.

use log::warn;

use crate::error::{param_err, Result};
use crate::model::{marginal_edge_probs, Assignment, ModelParams, MultilayerGraph};

pub const CLIP: f64 = 1e-12;

fn clip(x: f64) -> f64 {
    x.clamp(CLIP, 1.0 - CLIP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbEstimates {
    pub p_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    /// Layers whose intra estimate came out below the inter estimate and were
    /// swapped.
    pub swapped: Vec<usize>,
    /// A cluster had fewer than two nodes; `p_hat` is the moment estimate and
    /// `q_hat` the overall edge density.
    pub fallback: bool,
    /// Marginal intra/inter probabilities from known parameters, attached by
    /// [`ProbEstimates::with_marginals`] for diagnostics.
    pub tilde_p: Option<Vec<f64>>,
    pub tilde_q: Option<Vec<f64>>,
}

impl ProbEstimates {
    pub fn with_marginals(mut self, params: &ModelParams) -> Self {
        let (tp, tq) = marginal_probs(params);
        self.tilde_p = Some(tp);
        self.tilde_q = Some(tq);
        self
    }
}

/// `2 * edges / (n^2 / 2 - n)` per layer, clipped. Since `n^2/2 - n` is
/// smaller than the number of pairs this overestimates the edge density, a
/// deliberate upper bias toward the intra-cluster probability.
pub fn moment_p_hat(graph: &MultilayerGraph) -> Result<Vec<f64>> {
    let n = graph.n();
    if n < 3 {
        return param_err(format!("moment estimate needs n >= 3, got {n}"));
    }
    let denom = 0.5 * (n * n) as f64 - n as f64;
    Ok(graph.layers().iter().map(|l| clip(2.0 * l.edge_count() as f64 / denom)).collect())
}

/// Intra- and inter-cluster edge densities under assignment `z`.
pub fn plugin_pq(graph: &MultilayerGraph, z: &Assignment) -> Result<ProbEstimates> {
    let n = graph.n();
    if z.len() != n {
        return param_err(format!("assignment has {} labels for {n} nodes", z.len()));
    }
    let (plus, minus) = z.counts();
    if plus < 2 || minus < 2 {
        let total_pairs = (n * (n - 1) / 2) as f64;
        let q_hat = graph.layers().iter().map(|l| clip(l.edge_count() as f64 / total_pairs)).collect();
        warn!("a cluster has fewer than two nodes ({plus}/{minus}); using moment estimates");
        return Ok(ProbEstimates { p_hat: moment_p_hat(graph)?, q_hat, swapped: Vec::new(), fallback: true, tilde_p: None, tilde_q: None });
    }
    let intra_pairs = (plus * (plus - 1) / 2 + minus * (minus - 1) / 2) as f64;
    let inter_pairs = (plus * minus) as f64;
    let mut est = ProbEstimates {
        p_hat: Vec::new(),
        q_hat: Vec::new(),
        swapped: Vec::new(),
        fallback: false,
        tilde_p: None,
        tilde_q: None,
    };
    for (l, layer) in graph.layers().iter().enumerate() {
        let intra = layer.edges().filter(|&(i, j)| z.get(i) == z.get(j)).count() as f64;
        let inter = layer.edge_count() as f64 - intra;
        let mut p = clip(intra / intra_pairs);
        let mut q = clip(inter / inter_pairs);
        if p < q {
            std::mem::swap(&mut p, &mut q);
            est.swapped.push(l);
        }
        est.p_hat.push(p);
        est.q_hat.push(q);
    }
    if !est.swapped.is_empty() {
        warn!(
            "intra-cluster density below inter-cluster density in {} of {} layers {:?}; swapped",
            est.swapped.len(),
            graph.num_layers(),
            est.swapped
        );
    }
    Ok(est)
}

/// Exact marginal intra/inter edge probabilities of each layer once the
/// label flips are averaged out.
pub fn marginal_probs(params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    params.p.iter().zip(&params.q).map(|(&p, &q)| marginal_edge_probs(p, q, params.rho)).unzip()
}

/// Makes `p > q` hold strictly after clipping so refinement can use the
/// estimates; layers with `p == q` get a relative nudge.
pub fn separate(p_hat: &mut [f64], q_hat: &mut [f64]) {
    for (p, q) in p_hat.iter_mut().zip(q_hat.iter_mut()) {
        if *p <= *q {
            *p = (*q * (1.0 + 1e-9)).max(*q + CLIP).min(1.0);
            if *p <= *q {
                *q = *p * (1.0 - 1e-9);
            }
        }
    }
}
