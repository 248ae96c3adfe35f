//! Misclustering loss and replication summaries.

use crate::error::{param_err, Result};
use crate::model::Assignment;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    /// Fraction of misclustered nodes under the better global sign, in `[0, 1/2]`.
    pub value: f64,
    /// `+1` if `z_hat` itself is the better orientation, `-1` if `-z_hat` is.
    pub orientation: i8,
}

/// Normalized Hamming distance minimized over a global sign flip. Ties
/// report orientation `+1`.
pub fn misclustering(z_hat: &Assignment, z: &Assignment) -> Result<LossValue> {
    if z_hat.len() != z.len() {
        return param_err(format!("assignments have lengths {} and {}", z_hat.len(), z.len()));
    }
    if z.is_empty() {
        return param_err("assignments are empty");
    }
    let n = z.len();
    let diff = z_hat.labels().iter().zip(z.labels()).filter(|(a, b)| a != b).count();
    let (count, orientation) = if diff <= n - diff { (diff, 1) } else { (n - diff, -1) };
    Ok(LossValue { value: count as f64 / n as f64, orientation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one value.
    pub sd: f64,
    /// 5%, 25%, 50%, 75% and 95% quantiles, linearly interpolated.
    pub quantiles: [f64; 5],
}

pub const SUMMARY_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return param_err("cannot summarize an empty sample");
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let sd = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = SUMMARY_LEVELS.map(|level| quantile_sorted(&sorted, level));
    Ok(Summary { count, mean, sd, quantiles })
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (the default definition of R and NumPy).
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
