//! Node-wise MAP refinement of an initial global assignment.
//!
//! For node `i`, layer `l`, a global label `s*` and a layer label `s_l`, the
//! local objective is
//!
//! ```text
//! f(s*, s_l) = log((1-rho)/rho) 1{s_l = s*}
//!            + sum_{j != i, z_j = s_l} [ log(p(1-q) / (q(1-p))) A_ij + log((1-p)/(1-q)) ]
//! ```
//!
//! where `z` is the initial assignment. The joint maximization over `s*` and
//! all `s_l` decouples: for a fixed `s*` every layer picks its own best
//! `s_l`, so each node costs `O(L + degree)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::model::{Assignment, MultilayerGraph};
use crate::rates::guard;

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub rho_input: f64,
    /// At or below this `rho_input` the layer labels are tied to the global
    /// one and refinement maximizes the plain likelihood.
    pub rho_floor: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl RefineConfig {
    pub fn new(rho_input: f64, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let config = RefineConfig { rho_input, rho_floor: 1e-8, p, q };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.rho_input) {
            return param_err(format!("rho_input = {} is outside [0, 1/2)", self.rho_input));
        }
        if !(self.rho_floor > 0.0 && self.rho_floor < 0.5) {
            return param_err(format!("rho_floor = {} is outside (0, 1/2)", self.rho_floor));
        }
        if self.p.len() != self.q.len() || self.p.is_empty() {
            return param_err("p and q must be nonempty and of equal length");
        }
        for (l, (&p, &q)) in self.p.iter().zip(&self.q).enumerate() {
            if !(p > q && p <= 1.0 && q >= 0.0) {
                return param_err(format!("layer {l} needs 0 <= q < p <= 1 (p = {p}, q = {q})"));
            }
        }
        Ok(())
    }

    pub fn is_mle(&self) -> bool {
        self.rho_input <= self.rho_floor
    }

    pub fn effective_rho(&self) -> f64 {
        self.rho_input.max(self.rho_floor)
    }
}

/// Log-likelihood weights of one layer.
#[derive(Debug, Clone, Copy)]
struct LayerWeights {
    edge: f64,
    pair: f64,
}

struct Weights {
    prior: f64,
    mle: bool,
    layers: Vec<LayerWeights>,
}

impl Weights {
    fn new(config: &RefineConfig) -> Self {
        let rho = config.effective_rho();
        let layers = config
            .p
            .iter()
            .zip(&config.q)
            .map(|(&p, &q)| {
                let (p, q) = guard(p, q);
                let pair = (-p).ln_1p() - (-q).ln_1p();
                LayerWeights { edge: p.ln() - q.ln() - pair, pair }
            })
            .collect();
        Weights { prior: ((1.0 - rho) / rho).ln(), mle: config.is_mle(), layers }
    }
}

/// Sizes of the two clusters of `z` not counting node `i`.
fn counts_without(z: &Assignment, plus_total: usize, i: usize) -> [usize; 2] {
    let plus = plus_total - usize::from(z.get(i) == 1);
    [plus, z.len() - 1 - plus]
}

fn side(s: i8) -> usize {
    if s == 1 {
        0
    } else {
        1
    }
}

/// `f` for node `i` and layer `l` by its defining formula.
pub fn map_objective(
    i: usize,
    ell: usize,
    s_star: i8,
    s_ell: i8,
    z_tilde: &Assignment,
    graph: &MultilayerGraph,
    config: &RefineConfig,
) -> f64 {
    let weights = Weights::new(config);
    let w = weights.layers[ell];
    let (plus_total, _) = z_tilde.counts();
    let size = counts_without(z_tilde, plus_total, i)[side(s_ell)];
    let edges = graph.layer(ell).neighbors(i).iter().filter(|&&j| z_tilde.get(j as usize) == s_ell).count();
    let prior = if s_ell == s_star { weights.prior } else { 0.0 };
    prior + w.edge * edges as f64 + w.pair * size as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecision {
    pub s_star: i8,
    pub s_layers: Vec<i8>,
    /// Sum of the per-layer objectives at the chosen labels.
    pub total: f64,
    pub layer_scores: Vec<f64>,
}

/// Per-layer evidence `w_edge * #neighbors + w_pair * #nodes` on each side.
fn evidence(i: usize, z: &Assignment, plus_total: usize, graph: &MultilayerGraph, weights: &Weights) -> Vec<[f64; 2]> {
    let sizes = counts_without(z, plus_total, i);
    graph
        .layers()
        .iter()
        .zip(&weights.layers)
        .map(|(layer, w)| {
            let mut nb = [0usize; 2];
            for &j in layer.neighbors(i) {
                nb[side(z.get(j as usize))] += 1;
            }
            [0, 1].map(|s| w.edge * nb[s] as f64 + w.pair * sizes[s] as f64)
        })
        .collect()
}

/// Relative margin by which `s* = -1` must win.
const TIE_TOL: f64 = 1e-12;

fn decide(ev: &[[f64; 2]], weights: &Weights) -> NodeDecision {
    let mut best: Option<NodeDecision> = None;
    for s_star in [1i8, -1] {
        let own = side(s_star);
        let mut s_layers = Vec::with_capacity(ev.len());
        let mut layer_scores = Vec::with_capacity(ev.len());
        for e in ev {
            let stay = weights.prior + e[own];
            if weights.mle || stay >= e[1 - own] {
                s_layers.push(s_star);
                layer_scores.push(stay);
            } else {
                s_layers.push(-s_star);
                layer_scores.push(e[1 - own]);
            }
        }
        let total: f64 = layer_scores.iter().sum();
        // Both orientations sum the same terms in different orders, so an
        // exact tie can differ by rounding; it still goes to s* = +1.
        if best.as_ref().map_or(true, |b| total > b.total + TIE_TOL * b.total.abs().max(1.0)) {
            best = Some(NodeDecision { s_star, s_layers, total, layer_scores });
        }
    }
    best.unwrap()
}

/// Jointly refines the global and layer labels of node `i` against
/// `z_tilde`, whose entry `i` is ignored. Ties go to `s* = +1` and to
/// `s_l = s*`.
pub fn refine_node(i: usize, z_tilde: &Assignment, graph: &MultilayerGraph, config: &RefineConfig) -> NodeDecision {
    let weights = Weights::new(config);
    let (plus, _) = z_tilde.counts();
    decide(&evidence(i, z_tilde, plus, graph, &weights), &weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub z_star_hat: Assignment,
    pub z_layer_hat: Vec<Assignment>,
    /// `n x (L+1)`: column 0 is each node's total objective, column `l+1`
    /// its objective in layer `l`, at the chosen labels.
    pub per_node_scores: DMatrix<f64>,
    /// False if any node's orientation was decided by an exact overlap tie.
    pub aligned: bool,
    pub unaligned_nodes: Vec<usize>,
}

fn check_inputs(graph: &MultilayerGraph, config: &RefineConfig) -> Result<()> {
    config.validate()?;
    if config.p.len() != graph.num_layers() {
        return param_err(format!(
            "refinement has {} layer probabilities for {} layers",
            config.p.len(),
            graph.num_layers()
        ));
    }
    if graph.n() < 2 {
        return param_err("refinement needs at least two nodes");
    }
    Ok(())
}

fn assemble(decisions: Vec<NodeDecision>, num_layers: usize, unaligned_nodes: Vec<usize>) -> Result<DetectionResult> {
    let n = decisions.len();
    let mut scores = DMatrix::zeros(n, num_layers + 1);
    for (i, d) in decisions.iter().enumerate() {
        scores[(i, 0)] = d.total;
        for (l, &v) in d.layer_scores.iter().enumerate() {
            scores[(i, l + 1)] = v;
        }
    }
    let z_star_hat = Assignment::new(decisions.iter().map(|d| d.s_star).collect())?;
    let z_layer_hat = (0..num_layers)
        .map(|l| Assignment::new(decisions.iter().map(|d| d.s_layers[l]).collect()))
        .collect::<Result<_>>()?;
    Ok(DetectionResult {
        z_star_hat,
        z_layer_hat,
        per_node_scores: scores,
        aligned: unaligned_nodes.is_empty(),
        unaligned_nodes,
    })
}

/// One refinement pass over all nodes against a fixed initial assignment.
pub fn refine_generic(z_init: &Assignment, graph: &MultilayerGraph, config: &RefineConfig) -> Result<DetectionResult> {
    check_inputs(graph, config)?;
    if z_init.len() != graph.n() {
        return param_err(format!("initial assignment has {} labels for {} nodes", z_init.len(), graph.n()));
    }
    let weights = Weights::new(config);
    let (plus, _) = z_init.counts();
    let decisions: Vec<NodeDecision> = (0..graph.n())
        .into_par_iter()
        .map(|i| decide(&evidence(i, z_init, plus, graph, &weights), &weights))
        .collect();
    assemble(decisions, graph.num_layers(), Vec::new())
}

/// Initial assignment of the graph with node `i` removed, indexed like
/// [`MultilayerGraph::without_node`].
pub type LeaveOneOutInit<'a> = dyn Fn(usize) -> Result<Assignment> + Sync + 'a;

/// Re-inserts a placeholder at position `i` of a leave-one-out assignment.
fn expand(z: &Assignment, i: usize, fill: i8) -> Assignment {
    let mut labels = z.labels().to_vec();
    labels.insert(i, fill);
    Assignment::new(labels).expect("labels are +1/-1")
}

/// Leave-one-out refinement: node `i` is refined against an initial
/// assignment computed without it, and the `n` resulting orientations are
/// reconciled against node 0's by maximal overlap.
pub fn refine_provable(graph: &MultilayerGraph, config: &RefineConfig, init_fn: &LeaveOneOutInit) -> Result<DetectionResult> {
    check_inputs(graph, config)?;
    let n = graph.n();
    let weights = Weights::new(config);
    let local = |i: usize| -> Result<(Assignment, NodeDecision)> {
        let z = init_fn(i)?;
        if z.len() != n - 1 {
            return param_err(format!("leave-one-out init for node {i} has {} labels, expected {}", z.len(), n - 1));
        }
        let z = expand(&z, i, 1);
        let (plus, _) = z.counts();
        let d = decide(&evidence(i, &z, plus, graph, &weights), &weights);
        Ok((z, d))
    };

    let (reference, first) = local(0)?;
    let aligned: Vec<(NodeDecision, bool)> = (1..n)
        .into_par_iter()
        .map(|i| local(i).map(|(z, d)| align(&reference, &first, &z, d, i)))
        .collect::<Result<_>>()?;

    let mut decisions = Vec::with_capacity(n);
    decisions.push(first);
    let mut unaligned = Vec::new();
    for (k, (d, tie)) in aligned.into_iter().enumerate() {
        if tie {
            unaligned.push(k + 1);
        }
        decisions.push(d);
    }
    assemble(decisions, graph.num_layers(), unaligned)
}

/// Orients node `i`'s labels consistently with the reference solution.
///
/// The reference vector is node 0's leave-one-out init with its own slot set
/// to node 0's refined label; likewise for node `i`. The label of `i` becomes
/// the reference label whose class overlaps most with the class of `i` in its
/// own vector. Both vectors agree with their inits away from slots 0 and `i`,
/// so a 2x2 contingency table over the remaining nodes is shared by the
/// global and every per-layer alignment. Exact ties pick `+1`.
fn align(reference: &Assignment, first: &NodeDecision, own: &Assignment, d: NodeDecision, i: usize) -> (NodeDecision, bool) {
    let mut table = [[0usize; 2]; 2];
    for j in (1..own.len()).filter(|&j| j != i) {
        table[side(reference.get(j))][side(own.get(j))] += 1;
    }
    let mut tie = false;
    let mut pick = |ref_slot0: i8, own_label: i8| -> i8 {
        let b = side(own_label);
        let score = |s: i8| {
            let a = side(s);
            table[a][b]
                + usize::from(side(ref_slot0) == a && side(own.get(0)) == b)
                + usize::from(side(reference.get(i)) == a)
        };
        let (plus, minus) = (score(1), score(-1));
        tie |= plus == minus;
        if plus >= minus {
            1
        } else {
            -1
        }
    };
    let s_star = pick(first.s_star, d.s_star);
    let s_layers = d.s_layers.iter().zip(&first.s_layers).map(|(&own_l, &ref_l)| pick(ref_l, own_l)).collect();
    (NodeDecision { s_star, s_layers, ..d }, tie)
}
