//! Medoid, dispersion and Ripley's K-function computed from distances alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::Metric;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("empty distance matrix")]
    Empty,
    #[error("radii must be non-negative and strictly increasing (position {0})")]
    BadRadii(usize),
    #[error("intensity must be positive and finite, got {0}")]
    BadIntensity(f64),
}

/// Index minimizing the row sum; ties go to the lowest index.
pub fn medoid(m: &impl Metric) -> Result<usize, StatsError> {
    let n = m.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let sum: f64 = (0..n).map(|j| m.dist(i, j)).sum();
        if sum < best.1 {
            best = (i, sum);
        }
    }
    Ok(best.0)
}

/// Spread of a group around its medoid.
///
/// `avg_dispersion` and `median_dispersion` are the mean and median distance
/// to the medoid over the other points; `mad` is the median distance to the
/// medoid over all points, the medoid itself included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSummary {
    /// Row index of the medoid within the matrix.
    pub medoid_index: usize,
    pub avg_dispersion: f64,
    pub median_dispersion: f64,
    pub mad: f64,
}

pub fn dispersion(m: &impl Metric) -> Result<DispersionSummary, StatsError> {
    let med = medoid(m)?;
    let mut all: Vec<f64> = (0..m.len()).map(|i| m.dist(i, med)).collect();
    let mut others: Vec<f64> = all
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != med)
        .map(|(_, &d)| d)
        .collect();
    let avg = if others.is_empty() {
        0.0
    } else {
        others.iter().sum::<f64>() / others.len() as f64
    };
    Ok(DispersionSummary {
        medoid_index: med,
        avg_dispersion: avg,
        median_dispersion: median(&mut others),
        mad: median(&mut all),
    })
}

/// Median with the mean of the middle two for even counts; 0 when empty.
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Sampled K-function curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFunctionCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda: f64,
}

/// `K(r) = (1/λ) · Σ_{i≠j} [d_ij < r] / n` at each radius, without edge
/// correction. The inequality is strict.
pub fn ripley_k(m: &impl Metric, radii: &[f64], lambda: f64) -> Result<KFunctionCurve, StatsError> {
    let n = m.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(StatsError::BadIntensity(lambda));
    }
    for (k, r) in radii.iter().enumerate() {
        let increasing = k == 0 || *r > radii[k - 1];
        if r.is_nan() || *r < 0.0 || !increasing {
            return Err(StatsError::BadRadii(k));
        }
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(m.dist(i, j));
        }
    }
    dists.sort_by(f64::total_cmp);
    let values = radii
        .iter()
        .map(|&r| {
            // Each unordered pair counts twice in the ordered sum.
            let below = dists.partition_point(|&d| d < r);
            2.0 * below as f64 / (lambda * n as f64)
        })
        .collect();
    Ok(KFunctionCurve {
        radii: radii.to_vec(),
        values,
        lambda,
    })
}

/// Integers `0..=ceil(max distance)`, one per step of an integer-valued K.
pub fn default_radii(m: &impl Metric) -> Vec<f64> {
    let max = m.max_dist().ceil() as u64;
    (0..=max).map(|r| r as f64).collect()
}
