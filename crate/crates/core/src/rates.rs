//! Rate exponents of global and individualized estimation.
//!
//! With `m = n/2`, a layer's signal at tilt `t` is `I_t(p, q)` and the label
//! noise is `J = -log(2 sqrt(rho (1 - rho)))`. For a layer subset `S`,
//! `psi*_S(a) = sup_{t in [0,1]} a t + m sum_{l in S} I_t(l)`, and the
//! exponents are
//!
//! - `I_S = |S^c| J + psi*_S(0)` if `|S^c|` is even, and
//!   `(|S^c| + 1) J + psi*_S(-2J)` otherwise (global);
//! - `J_S`, the same expression with the parity and count of `|S|`
//!   (individualized).
//!
//! The global misclustering rate is governed by `min_S I_S` and a layer's
//! individual rate by `min_{S not containing l} I_{S + l}` together with
//! `J_{{l}}`. The minimizers are found without enumerating subsets: the even
//! case is separable per layer, and the odd case is handled through its dual
//! in `t`, whose per-`t` subproblem is separable too. The dual candidates
//! are re-scored exactly and polished by a local search, since the dual
//! value only bounds the odd case from below.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::Result;
use crate::model::ModelParams;

pub const PROB_GUARD: f64 = 1e-12;
pub const RHO_FLOOR: f64 = 1e-8;
/// Golden-section tolerance on `t`.
pub const T_TOL: f64 = 1e-10;
pub const DEFAULT_T_GRID: usize = 2001;

/// Clamps `p <= 1 - 1e-12` and `q >= 1e-12` so every logarithm is finite.
pub fn guard(p: f64, q: f64) -> (f64, f64) {
    (p.min(1.0 - PROB_GUARD), q.max(PROB_GUARD))
}

/// `log(p^{1-t} q^t + (1-p)^{1-t} (1-q)^t)`, evaluated through `ln_1p` and
/// `exp_m1` so sparse layers keep their relative precision.
fn log_mixture(p: f64, q: f64, t: f64) -> f64 {
    let head = ((1.0 - t) * p.ln() + t * q.ln()).exp();
    let tail = ((1.0 - t) * (-p).ln_1p() + t * (-q).ln_1p()).exp_m1();
    (head + tail).ln_1p()
}

/// Layer signal strength `I_t(p, q)`; exactly 0 at `t = 0` and `t = 1`.
pub fn layer_info(p: f64, q: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (p, q) = guard(p, q);
    (-(log_mixture(p, q, t) + log_mixture(p, q, 1.0 - t))).max(0.0)
}

/// Label-noise exponent; `+inf` for `rho <= RHO_FLOOR`.
pub fn j_rho(rho: f64) -> f64 {
    if rho <= RHO_FLOOR {
        f64::INFINITY
    } else {
        -(2.0 * (rho * (1.0 - rho)).sqrt()).ln()
    }
}

/// Maximizes a unimodal function on `[lo, hi]` to `T_TOL`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > T_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (f1, x1)
    } else {
        (f2, x2)
    }
}

/// The layers of one instance as seen by the rate formulas.
#[derive(Debug, Clone)]
pub struct RateModel {
    pub m: f64,
    pub j: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl RateModel {
    pub fn new(n: usize, rho: f64, p: &[f64], q: &[f64]) -> Self {
        assert_eq!(p.len(), q.len(), "p and q lengths differ");
        RateModel { m: n as f64 / 2.0, j: j_rho(rho), p: p.to_vec(), q: q.to_vec() }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self::new(params.n, params.rho, &params.p, &params.q)
    }

    pub fn num_layers(&self) -> usize {
        self.p.len()
    }

    /// `m I_t` of layer `l`.
    pub fn layer_signal(&self, l: usize, t: f64) -> f64 {
        self.m * layer_info(self.p[l], self.q[l], t)
    }

    /// `m sum_{l in S} I_t(l)`, i.e. `-psi_S(t)`.
    pub fn pooled_signal(&self, in_s: &[bool], t: f64) -> f64 {
        (0..self.num_layers()).filter(|&l| in_s[l]).map(|l| self.layer_signal(l, t)).sum()
    }

    /// `psi*_S(a)` and a maximizing `t`.
    pub fn psi_star(&self, in_s: &[bool], a: f64) -> (f64, f64) {
        assert_eq!(in_s.len(), self.num_layers(), "subset mask length");
        if !in_s.iter().any(|&b| b) {
            return if a > 0.0 { (a, 1.0) } else { (0.0, 0.0) };
        }
        if a == 0.0 {
            // Every I_t is symmetric about 1/2 and concave.
            return (self.pooled_signal(in_s, 0.5), 0.5);
        }
        let g = |t: f64| a * t + self.pooled_signal(in_s, t);
        // A linear term of sign `a` moves the maximizer of a symmetric
        // concave function to that side of 1/2.
        let (lo, hi) = if a < 0.0 { (0.0, 0.5) } else { (0.5, 1.0) };
        let mut best = golden_max(g, lo, hi);
        for t in [lo, hi] {
            let v = g(t);
            if v > best.0 {
                best = (v, t);
            }
        }
        best
    }

    /// Shared parity-dispatched form of the two exponents, with `count`
    /// being `|S^c|` (global) or `|S|` (individual).
    fn parity_snr(&self, in_s: &[bool], count: usize) -> f64 {
        if self.j.is_infinite() {
            return if count == 0 { self.psi_star(in_s, 0.0).0 } else { f64::INFINITY };
        }
        if count % 2 == 0 {
            count as f64 * self.j + self.psi_star(in_s, 0.0).0
        } else {
            (count + 1) as f64 * self.j + self.psi_star(in_s, -2.0 * self.j).0
        }
    }

    /// Global exponent `I_S`.
    pub fn global_snr(&self, in_s: &[bool]) -> f64 {
        self.parity_snr(in_s, in_s.iter().filter(|&&b| !b).count())
    }

    /// Individual exponent `J_S`.
    pub fn individual_snr_j(&self, in_s: &[bool]) -> f64 {
        self.parity_snr(in_s, in_s.iter().filter(|&&b| b).count())
    }
}

pub fn psi_star(in_s: &[bool], a: f64, n: usize, p: &[f64], q: &[f64]) -> (f64, f64) {
    // The noise level plays no part in psi*.
    RateModel::new(n, 0.5, p, q).psi_star(in_s, a)
}

pub fn global_snr(in_s: &[bool], n: usize, rho: f64, p: &[f64], q: &[f64]) -> f64 {
    RateModel::new(n, rho, p, q).global_snr(in_s)
}

pub fn individual_snr_j(in_s: &[bool], n: usize, rho: f64, p: &[f64], q: &[f64]) -> f64 {
    RateModel::new(n, rho, p, q).individual_snr_j(in_s)
}

/// A minimizing subset and its exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetMin {
    pub value: f64,
    /// Membership mask of the minimizing `S`.
    pub mask: Vec<bool>,
    /// Parity of `|S^c|` for the minimizer.
    pub complement_odd: bool,
    /// Lower bound on the odd-`|S^c|` exponents from the dual sweep
    /// (`+inf` when no odd subset is admissible).
    pub odd_dual_bound: f64,
}

impl SubsetMin {
    pub fn members(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&l| self.mask[l]).collect()
    }
}

/// Per-layer in/out decision minimizing `sum_out J + sum_in cost` subject to
/// the parity of the out-count, or `None` if no free layer can fix parity.
fn separable_with_parity(j: f64, cost: &[f64], forced: Option<usize>, want_odd: bool) -> Option<(Vec<bool>, f64)> {
    let mut mask: Vec<bool> = cost.iter().map(|&c| c <= j).collect();
    if let Some(f) = forced {
        mask[f] = true;
    }
    let out = mask.iter().filter(|&&b| !b).count();
    if (out % 2 == 1) != want_odd {
        let flip = (0..cost.len())
            .filter(|&l| Some(l) != forced)
            .min_by(|&a, &b| (j - cost[a]).abs().total_cmp(&(j - cost[b]).abs()))?;
        mask[flip] = !mask[flip];
    }
    let total = (0..cost.len()).map(|l| if mask[l] { cost[l] } else { j }).sum();
    Some((mask, total))
}

/// Exponent minimization over subsets, optionally with one layer forced in.
pub fn minimize_snr(model: &RateModel, forced: Option<usize>, t_grid: usize) -> SubsetMin {
    let big_l = model.num_layers();
    let j = model.j;
    let exact = |mask: &[bool]| model.global_snr(mask);

    if j.is_infinite() {
        let mask = vec![true; big_l];
        return SubsetMin { value: exact(&mask), mask, complement_odd: false, odd_dual_bound: f64::INFINITY };
    }

    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut candidates: Vec<Vec<bool>> = Vec::new();
    let mut push = |mask: Vec<bool>, candidates: &mut Vec<Vec<bool>>| {
        if seen.insert(mask.clone()) {
            candidates.push(mask);
        }
    };

    // Even |S^c|: the exponent is sum_out J + sum_in m I_{1/2}.
    let half: Vec<f64> = (0..big_l).map(|l| model.layer_signal(l, 0.5)).collect();
    if let Some((mask, _)) = separable_with_parity(j, &half, forced, false) {
        push(mask, &mut candidates);
    }

    // Odd |S^c|: sup_t of (1 - 2t) J + the separable odd-parity minimum at t.
    let dual = |t: f64| -> Option<(Vec<bool>, f64)> {
        let cost: Vec<f64> = (0..big_l).map(|l| model.layer_signal(l, t)).collect();
        separable_with_parity(j, &cost, forced, true).map(|(mask, v)| (mask, (1.0 - 2.0 * t) * j + j + v))
    };
    let grid = t_grid.max(2);
    let mut odd_dual_bound = f64::INFINITY;
    let mut best_k = None;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..grid {
        let t = 0.5 * k as f64 / (grid - 1) as f64;
        if let Some((mask, v)) = dual(t) {
            if v > best_val {
                best_val = v;
                best_k = Some(k);
            }
            push(mask, &mut candidates);
        }
    }
    if let Some(k) = best_k {
        let step = 0.5 / (grid - 1) as f64;
        let lo = (k as f64 - 1.0).max(0.0) * step;
        let hi = ((k + 1) as f64 * step).min(0.5);
        let f = |t: f64| dual(t).map_or(f64::NEG_INFINITY, |(_, v)| v);
        let (v, t) = golden_max(f, lo, hi);
        odd_dual_bound = v.max(best_val);
        if let Some((mask, _)) = dual(t) {
            push(mask, &mut candidates);
        }
    }

    let mut best_mask = candidates[0].clone();
    let mut best = exact(&best_mask);
    for mask in &candidates[1..] {
        let v = exact(mask);
        if v < best {
            best = v;
            best_mask = mask.clone();
        }
    }
    let (mask, value) = local_search(&exact, best_mask, best, forced);
    let complement_odd = mask.iter().filter(|&&b| !b).count() % 2 == 1;
    SubsetMin { value, mask, complement_odd, odd_dual_bound }
}

/// Layer counts up to which pair moves are tried in the local search.
const PAIR_MOVE_LIMIT: usize = 24;

/// Best-improvement descent over single toggles and, for small `L`, pair
/// toggles of the free layers.
fn local_search(exact: &(dyn Fn(&[bool]) -> f64 + Sync), mut mask: Vec<bool>, mut value: f64, forced: Option<usize>) -> (Vec<bool>, f64) {
    let free: Vec<usize> = (0..mask.len()).filter(|&l| Some(l) != forced).collect();
    loop {
        let mut moves: Vec<Vec<usize>> = free.iter().map(|&l| vec![l]).collect();
        if mask.len() <= PAIR_MOVE_LIMIT {
            for (a, &la) in free.iter().enumerate() {
                moves.extend(free[a + 1..].iter().map(|&lb| vec![la, lb]));
            }
        }
        let scored: Vec<(f64, usize)> = moves
            .par_iter()
            .enumerate()
            .map(|(k, mv)| {
                let mut trial = mask.clone();
                for &l in mv {
                    trial[l] = !trial[l];
                }
                (exact(&trial), k)
            })
            .collect();
        let Some(&(v, k)) = scored.iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))) else {
            return (mask, value);
        };
        // Require a relative gain above rounding noise.
        if !(v < value - 1e-13 * value.abs()) {
            return (mask, value);
        }
        for &l in &moves[k] {
            mask[l] = !mask[l];
        }
        value = v;
    }
}

pub fn minimize_global_snr(n: usize, rho: f64, p: &[f64], q: &[f64], t_grid: usize) -> SubsetMin {
    minimize_snr(&RateModel::new(n, rho, p, q), None, t_grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualRate {
    /// `min_{S not containing l} I_{S + l}` and its minimizing set (which
    /// contains `l`).
    pub min_snr: SubsetMin,
    /// `J_{{l}} = 2J + psi*_{{l}}(-2J)`.
    pub j_single: f64,
}

pub fn minimize_individual_snr(ell: usize, n: usize, rho: f64, p: &[f64], q: &[f64], t_grid: usize) -> IndividualRate {
    individual_rate(&RateModel::new(n, rho, p, q), ell, t_grid)
}

fn individual_rate(model: &RateModel, ell: usize, t_grid: usize) -> IndividualRate {
    assert!(ell < model.num_layers(), "layer {ell} out of range");
    let mut single = vec![false; model.num_layers()];
    single[ell] = true;
    IndividualRate { min_snr: minimize_snr(model, Some(ell), t_grid), j_single: model.individual_snr_j(&single) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub j_rho: f64,
    pub m: f64,
    /// `I_{1/2}` per layer.
    pub i_half: Vec<f64>,
    pub global: SubsetMin,
    pub per_layer: Vec<IndividualRate>,
    /// `exp(-min_S I_S)`.
    pub global_exponent: f64,
    /// `exp(-min_S I_{S + l}) + exp(-J_{{l}})` per layer.
    pub individual_exponents: Vec<f64>,
}

pub fn rate_report(params: &ModelParams) -> Result<RateReport> {
    params.validate()?;
    Ok(rate_report_with_grid(params, DEFAULT_T_GRID))
}

pub fn rate_report_with_grid(params: &ModelParams, t_grid: usize) -> RateReport {
    let model = RateModel::from_params(params);
    let global = minimize_snr(&model, None, t_grid);
    let per_layer: Vec<IndividualRate> =
        (0..model.num_layers()).into_par_iter().map(|l| individual_rate(&model, l, t_grid)).collect();
    let individual_exponents =
        per_layer.iter().map(|r| (-r.min_snr.value).exp() + (-r.j_single).exp()).collect();
    RateReport {
        j_rho: model.j,
        m: model.m,
        i_half: (0..model.num_layers()).map(|l| layer_info(params.p[l], params.q[l], 0.5)).collect(),
        global_exponent: (-global.value).exp(),
        global,
        per_layer,
        individual_exponents,
    }
}
