//! Two-cluster k-means in the plane: k-means++ seeding, Lloyd iterations and
//! the best of several restarts.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{param_err, Result};
use crate::model::Assignment;
use crate::rng;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Points of the lexicographically smaller centroid get `+1`.
    pub assignment: Assignment,
    pub centroids: [Point; 2],
    /// Sum of squared distances of each point to its centroid.
    pub objective: f64,
    pub restarts_used: usize,
    /// All points coincide, so one cluster is empty.
    pub degenerate: bool,
}

const MAX_LLOYD: usize = 1000;

fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Approximate minimizer of the 2-means objective.
///
/// Lloyd iterations stop at a fixed point of the assignment or once an
/// iteration improves the objective by at most `epsilon` relative. Distance
/// ties go to the first cluster. Restarts use independent random streams, so
/// the result does not depend on how they are scheduled.
pub fn approx_kmeans2(points: &[Point], epsilon: f64, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if restarts == 0 {
        return param_err("k-means needs at least one restart");
    }
    if points.is_empty() {
        return param_err("k-means needs at least one point");
    }
    if !(epsilon >= 0.0) {
        return param_err(format!("epsilon = {epsilon} must be nonnegative"));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Ok(KMeansResult {
            assignment: Assignment::constant(points.len(), 1),
            centroids: [points[0], points[0]],
            objective: 0.0,
            restarts_used: 0,
            degenerate: true,
        });
    }

    let runs: Vec<(Vec<u8>, [Point; 2], f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::substream(seed, rng::tag::KMEANS, r as u64);
            lloyd(points, plus_plus(points, &mut rng), epsilon)
        })
        .collect();
    // Earliest restart wins ties.
    let best = (0..runs.len()).fold(0, |b, r| if runs[r].2 < runs[b].2 { r } else { b });
    let (labels, centroids, objective) = runs.into_iter().nth(best).unwrap();

    let swap = centroids[1] < centroids[0];
    let plus_cluster = if swap { 1 } else { 0 };
    let labels = labels.iter().map(|&c| if c == plus_cluster { 1 } else { -1 }).collect();
    let centroids = if swap { [centroids[1], centroids[0]] } else { centroids };
    Ok(KMeansResult {
        assignment: Assignment::new(labels)?,
        centroids,
        objective,
        restarts_used: restarts,
        degenerate: false,
    })
}

fn plus_plus(points: &[Point], rng: &mut impl Rng) -> [Point; 2] {
    let first = points[rng.gen_range(0..points.len())];
    let weights: Vec<f64> = points.iter().map(|p| dist2(p, &first)).collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    let mut second = *points.iter().rev().find(|p| dist2(p, &first) > 0.0).unwrap();
    for (p, w) in points.iter().zip(&weights) {
        if *w > 0.0 {
            if target < *w {
                second = *p;
                break;
            }
            target -= w;
        }
    }
    [first, second]
}

fn assign(points: &[Point], centroids: &[Point; 2], labels: &mut [u8]) -> bool {
    let mut changed = false;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let c = if dist2(p, &centroids[0]) <= dist2(p, &centroids[1]) { 0 } else { 1 };
        changed |= *l != c;
        *l = c;
    }
    changed
}

/// Cluster means; an empty cluster is re-seeded at the point farthest from
/// the other centroid.
fn update(points: &[Point], labels: &mut [u8]) -> [Point; 2] {
    let mut sums = [[0.0; 2]; 2];
    let mut counts = [0usize; 2];
    for (p, &l) in points.iter().zip(labels.iter()) {
        sums[l as usize][0] += p[0];
        sums[l as usize][1] += p[1];
        counts[l as usize] += 1;
    }
    if let Some(empty) = (0..2).find(|&c| counts[c] == 0) {
        let other = 1 - empty;
        let mean = [sums[other][0] / counts[other] as f64, sums[other][1] / counts[other] as f64];
        let far = (0..points.len())
            .fold(0, |b, i| if dist2(&points[i], &mean) > dist2(&points[b], &mean) { i } else { b });
        labels[far] = empty as u8;
        return update(points, labels);
    }
    [
        [sums[0][0] / counts[0] as f64, sums[0][1] / counts[0] as f64],
        [sums[1][0] / counts[1] as f64, sums[1][1] / counts[1] as f64],
    ]
}

fn objective(points: &[Point], labels: &[u8], centroids: &[Point; 2]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| dist2(p, &centroids[l as usize])).sum()
}

fn lloyd(points: &[Point], seeds: [Point; 2], epsilon: f64) -> (Vec<u8>, [Point; 2], f64) {
    let mut labels = vec![0u8; points.len()];
    assign(points, &seeds, &mut labels);
    let mut centroids = update(points, &mut labels);
    let mut obj = objective(points, &labels, &centroids);
    for _ in 0..MAX_LLOYD {
        let mut next = labels.clone();
        if !assign(points, &centroids, &mut next) {
            break;
        }
        let next_centroids = update(points, &mut next);
        let next_obj = objective(points, &next, &next_centroids);
        if next_obj > obj {
            break;
        }
        let gain = obj - next_obj;
        labels = next;
        centroids = next_centroids;
        obj = next_obj;
        if gain <= epsilon * obj {
            break;
        }
    }
    (labels, centroids, obj)
}
