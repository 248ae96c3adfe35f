//! Model parameters, label vectors, multilayer graphs and the hierarchical
//! sampler.
//!
//! A sample is drawn in two steps per layer: each node keeps its global label
//! with probability `1 - rho` and flips otherwise, then every unordered pair
//! is connected with probability `p[l]` when the two layer labels agree and
//! `q[l]` when they differ. Layers are independent given the global labels
//! and each one draws from its own random stream, so they are sampled in
//! parallel without changing the output.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::rng::{self, StreamRng};

/// Full parameterization of a two-block inhomogeneous multilayer SBM.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub rho: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Cluster balance bound; only checked and reported.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(n: usize, rho: f64, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let params = ModelParams { n, rho, p, q, beta: 1.0 };
        params.validate()?;
        Ok(params)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn num_layers(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return param_err("n must be positive");
        }
        if self.p.is_empty() {
            return param_err("at least one layer is required");
        }
        if self.p.len() != self.q.len() {
            return param_err(format!(
                "p has {} entries but q has {}",
                self.p.len(),
                self.q.len()
            ));
        }
        if !(0.0..0.5).contains(&self.rho) {
            return param_err(format!("rho = {} is outside [0, 1/2)", self.rho));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return param_err(format!("beta = {} must be a finite value >= 1", self.beta));
        }
        for (l, (&p, &q)) in self.p.iter().zip(&self.q).enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return param_err(format!("p[{l}] = {p} is outside (0, 1]"));
            }
            if !(0.0..1.0).contains(&q) {
                return param_err(format!("q[{l}] = {q} is outside [0, 1)"));
            }
            if p <= q {
                return param_err(format!("layer {l} needs p > q (p = {p}, q = {q})"));
            }
        }
        Ok(())
    }
}

/// Marginal intra/inter connection probabilities of layer `(p, q)` once the
/// label flips are integrated out.
pub fn marginal_edge_probs(p: f64, q: f64, rho: f64) -> (f64, f64) {
    let shift = 2.0 * (p - q) * rho * (1.0 - rho);
    (p - shift, q + shift)
}

/// A vector of `+1`/`-1` community labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<i8>);

impl Assignment {
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&s| s != 1 && s != -1) {
            return param_err(format!("label {} at node {i} is not +1 or -1", labels[i]));
        }
        Ok(Assignment(labels))
    }

    pub fn constant(n: usize, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1);
        Assignment(vec![sign; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn negated(&self) -> Self {
        Assignment(self.0.iter().map(|&s| -s).collect())
    }

    /// Sizes of the `+1` and `-1` clusters.
    pub fn counts(&self) -> (usize, usize) {
        let plus = self.0.iter().filter(|&&s| s == 1).count();
        (plus, self.0.len() - plus)
    }

    /// Whether both cluster sizes lie in `[n / (2 beta), n beta / 2]`.
    pub fn is_balanced(&self, beta: f64) -> bool {
        let n = self.0.len() as f64;
        let (plus, minus) = self.counts();
        [plus, minus]
            .iter()
            .all(|&c| (c as f64) >= n / (2.0 * beta) && (c as f64) <= n * beta / 2.0)
    }

    /// Copy with node `skip` removed.
    pub fn without(&self, skip: usize) -> Self {
        Assignment(
            self.0
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &s)| s)
                .collect(),
        )
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }
}

/// First `floor(n/2)` nodes in the `+1` block, the rest in `-1`.
pub fn balanced_assignment(n: usize) -> Result<Assignment> {
    if n < 2 {
        return param_err(format!("balanced assignment needs n >= 2, got {n}"));
    }
    let half = n / 2;
    Ok(Assignment((0..n).map(|i| if i < half { 1 } else { -1 }).collect()))
}

/// One undirected simple graph on `n` nodes, stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl Layer {
    /// Builds a layer from unordered node pairs. Duplicates are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut degree = vec![0usize; n];
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return param_err(format!("edge ({a}, {b}) has an endpoint >= n = {n}"));
            }
            if a == b {
                return param_err(format!("self-loop at node {a}"));
            }
            pairs.push((a.min(b), a.max(b)));
        }
        pairs.sort_unstable();
        pairs.dedup();
        for &(a, b) in &pairs {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n]];
        // Visiting sorted (a, b) pairs fills each list in increasing order for
        // the `b` side; the `a` side is sorted afterwards.
        for &(a, b) in &pairs {
            neighbors[fill[a]] = b as u32;
            fill[a] += 1;
            neighbors[fill[b]] = a as u32;
            fill[b] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Layer { offsets, neighbors })
    }

    pub fn empty(n: usize) -> Self {
        Layer { offsets: vec![0; n + 1], neighbors: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Row `i` of the 0/1 adjacency matrix.
    pub fn dense_row(&self, i: usize) -> Vec<u8> {
        let mut row = vec![0u8; self.n()];
        for &j in self.neighbors(i) {
            row[j as usize] = 1;
        }
        row
    }

    /// The induced subgraph on all nodes except `skip`, relabelled to `0..n-1`.
    pub fn without_node(&self, skip: usize) -> Layer {
        let n = self.n();
        let relabel = |j: u32| if (j as usize) > skip { j - 1 } else { j };
        let mut offsets = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(self.neighbors.len());
        offsets.push(0);
        for i in (0..n).filter(|&i| i != skip) {
            neighbors.extend(
                self.neighbors(i).iter().filter(|&&j| j as usize != skip).map(|&j| relabel(j)),
            );
            offsets.push(neighbors.len());
        }
        Layer { offsets, neighbors }
    }
}

/// `L` layers over a common node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilayerGraph {
    n: usize,
    layers: Vec<Layer>,
}

impl MultilayerGraph {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return param_err("a multilayer graph needs at least one layer");
        }
        if let Some(l) = layers.iter().position(|layer| layer.n() != n) {
            return param_err(format!("layer {l} has {} nodes, expected {n}", layers[l].n()));
        }
        Ok(MultilayerGraph { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn without_node(&self, skip: usize) -> MultilayerGraph {
        MultilayerGraph {
            n: self.n - 1,
            layers: self.layers.iter().map(|layer| layer.without_node(skip)).collect(),
        }
    }
}

/// One Monte-Carlo draw together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub params: ModelParams,
    pub z_star: Assignment,
    pub z_layers: Vec<Assignment>,
    pub graph: MultilayerGraph,
    pub seed: u64,
    /// Number of nodes whose layer label differs from the global one.
    pub flips: Vec<usize>,
}

/// Draws layer labels and adjacency matrices for a fixed global assignment.
pub fn sample_imlsbm(params: &ModelParams, z_star: &Assignment, seed: u64) -> Result<SampleRecord> {
    params.validate()?;
    if z_star.len() != params.n {
        return param_err(format!(
            "z_star has {} labels but n = {}",
            z_star.len(),
            params.n
        ));
    }
    let n = params.n;
    let drawn: Vec<(Assignment, Layer, usize)> = (0..params.num_layers())
        .into_par_iter()
        .map(|l| {
            let mut rng = rng::substream(seed, rng::tag::LAYER, l as u64);
            let labels: Vec<i8> = z_star
                .labels()
                .iter()
                .map(|&s| if rng.gen::<f64>() < params.rho { -s } else { s })
                .collect();
            let flips = labels.iter().zip(z_star.labels()).filter(|(a, b)| a != b).count();
            let layer = sample_layer(n, &labels, params.p[l], params.q[l], &mut rng);
            (Assignment(labels), layer, flips)
        })
        .collect();

    let mut z_layers = Vec::with_capacity(drawn.len());
    let mut layers = Vec::with_capacity(drawn.len());
    let mut flips = Vec::with_capacity(drawn.len());
    for (z, layer, f) in drawn {
        z_layers.push(z);
        layers.push(layer);
        flips.push(f);
    }
    Ok(SampleRecord {
        params: params.clone(),
        z_star: z_star.clone(),
        z_layers,
        graph: MultilayerGraph { n, layers },
        seed,
        flips,
    })
}

fn sample_layer(n: usize, labels: &[i8], p: f64, q: f64, rng: &mut StreamRng) -> Layer {
    let plus: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| labels[i] == -1).collect();
    let mut edges = Vec::new();
    for block in [&plus, &minus] {
        let g = block.len() as u64;
        let mut cursor = TriangleCursor::default();
        for_each_success(g * g.saturating_sub(1) / 2, p, rng, |k| {
            let (a, b) = cursor.locate(k, block.len());
            edges.push((block[a], block[b]));
        });
    }
    let width = minus.len() as u64;
    for_each_success(plus.len() as u64 * width, q, rng, |k| {
        edges.push((plus[(k / width) as usize], minus[(k % width) as usize]));
    });
    Layer::from_edges(n, &edges).expect("sampled edges are valid")
}

/// Calls `emit` with the (increasing) indices in `0..total` that succeed in
/// independent Bernoulli(`prob`) trials, jumping over failures with geometric
/// gaps.
fn for_each_success(total: u64, prob: f64, rng: &mut StreamRng, mut emit: impl FnMut(u64)) {
    if total == 0 || prob <= 0.0 {
        return;
    }
    if prob >= 1.0 {
        (0..total).for_each(emit);
        return;
    }
    let log_fail = (-prob).ln_1p();
    let mut k: u64 = 0;
    loop {
        let u: f64 = rng.gen();
        let gap = ((1.0 - u).ln() / log_fail).floor();
        if gap >= (total - k) as f64 {
            return;
        }
        k += gap as u64;
        emit(k);
        k += 1;
        if k >= total {
            return;
        }
    }
}

/// Maps increasing linear indices of the strict upper triangle of a `g x g`
/// matrix (row-major) to `(row, col)`.
#[derive(Default)]
struct TriangleCursor {
    row: usize,
    row_start: u64,
}

impl TriangleCursor {
    fn locate(&mut self, k: u64, g: usize) -> (usize, usize) {
        loop {
            let len = (g - 1 - self.row) as u64;
            if k < self.row_start + len {
                return (self.row, self.row + 1 + (k - self.row_start) as usize);
            }
            self.row_start += len;
            self.row += 1;
        }
    }
}

/// The three layer types of the simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerGroup {
    Weak,
    Intermediate,
    Strong,
}

impl LayerGroup {
    pub fn name(self) -> &'static str {
        match self {
            LayerGroup::Weak => "weak",
            LayerGroup::Intermediate => "intermediate",
            LayerGroup::Strong => "strong",
        }
    }

    pub const ALL: [LayerGroup; 3] = [LayerGroup::Weak, LayerGroup::Intermediate, LayerGroup::Strong];
}

/// Which layer types an experiment design contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    /// Every layer weak: `p = c/(nL)`, `q = 1/(nL)`.
    Weak,
    /// Every layer intermediate: `p = c log n/(nL)`, `q = log n/(nL)`.
    Intermediate,
    /// 30% weak, 65% intermediate, 5% strong (`p = c log n/n`, `q = log n/n`).
    StrongMix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDesign {
    pub params: ModelParams,
    pub groups: Vec<LayerGroup>,
}

impl ExperimentDesign {
    /// Layer indices belonging to `group`.
    pub fn layers_in(&self, group: LayerGroup) -> Vec<usize> {
        (0..self.groups.len()).filter(|&l| self.groups[l] == group).collect()
    }
}

/// Layer probabilities of the three-group simulation design.
pub fn experiment_params(n: usize, num_layers: usize, c: f64, rho: f64, scaling: Scaling) -> Result<ExperimentDesign> {
    if !(c > 1.0 && c.is_finite()) {
        return param_err(format!("signal constant c = {c} must exceed 1"));
    }
    if num_layers == 0 {
        return param_err("at least one layer is required");
    }
    let groups: Vec<LayerGroup> = match scaling {
        Scaling::Weak => vec![LayerGroup::Weak; num_layers],
        Scaling::Intermediate => vec![LayerGroup::Intermediate; num_layers],
        Scaling::StrongMix => {
            // floor(0.3 L) and floor(0.95 L) in exact integer arithmetic.
            let weak_end = 3 * num_layers / 10;
            let mid_end = 95 * num_layers / 100;
            (0..num_layers)
                .map(|l| {
                    if l < weak_end {
                        LayerGroup::Weak
                    } else if l < mid_end {
                        LayerGroup::Intermediate
                    } else {
                        LayerGroup::Strong
                    }
                })
                .collect()
        }
    };
    let nf = n as f64;
    let lf = num_layers as f64;
    let log_n = nf.ln();
    let (mut p, mut q) = (Vec::with_capacity(num_layers), Vec::with_capacity(num_layers));
    for g in &groups {
        let base = match g {
            LayerGroup::Weak => 1.0 / (nf * lf),
            LayerGroup::Intermediate => log_n / (nf * lf),
            LayerGroup::Strong => log_n / nf,
        };
        let (pl, ql) = (c * base, base);
        if !(pl < 1.0) {
            return param_err(format!(
                "{} layer probability p = {pl} is not below 1 (n = {n}, L = {num_layers}, c = {c})",
                g.name()
            ));
        }
        p.push(pl);
        q.push(ql);
    }
    let params = ModelParams::new(n, rho, p, q)?;
    Ok(ExperimentDesign { params, groups })
}
