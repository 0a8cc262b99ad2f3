//! Cross-correlation timing metric and the classic argmax estimator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::OfdmConfig;

/// The raw metric `f(m) = |sum_n x*(n) y(m+n)|^2` over the search range.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingMetric {
    values: Vec<f64>,
}

impl TimingMetric {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The l2-normalized metric used as the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Wraps a vector that is already unit norm (within 1e-6).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let norm_sqr: f64 = values.iter().map(|v| v * v).sum();
        if (norm_sqr.sqrt() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParam(format!(
                "feature vector must be unit norm (got {})",
                norm_sqr.sqrt()
            )));
        }
        Ok(FeatureVector { values })
    }

    /// Normalizes an arbitrary nonzero vector to unit norm.
    pub fn from_unnormalized(mut values: Vec<f64>) -> Result<Self> {
        let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateMetric);
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Correlates the local sequence against every window start in the search
/// range. Computed directly (O(n * ns)); this is the reference semantics the
/// complexity figures count.
pub fn timing_metric(config: &OfdmConfig, y: &[Complex64], x: &[Complex64]) -> Result<TimingMetric> {
    if y.len() != config.nw() {
        return Err(Error::DimensionMismatch {
            what: "timing_metric: observed frame",
            expected: config.nw(),
            got: y.len(),
        });
    }
    if x.len() != config.n() {
        return Err(Error::DimensionMismatch {
            what: "timing_metric: local sequence",
            expected: config.n(),
            got: x.len(),
        });
    }
    let ns = config.ns();
    let values = (0..ns)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, xv) in x.iter().enumerate() {
                acc += xv.conj() * y[m + n];
            }
            acc.norm_sqr()
        })
        .collect();
    Ok(TimingMetric { values })
}

/// Scales the metric to unit l2 norm. An identically-zero metric is an
/// error; the caller is expected to drop or regenerate the trial.
pub fn normalize(metric: &TimingMetric) -> Result<FeatureVector> {
    FeatureVector::from_unnormalized(metric.values.clone())
}

/// The classic estimator: index of the metric maximum, ties broken towards
/// the smallest index.
pub fn classic_estimate(metric: &TimingMetric) -> usize {
    let mut best = 0;
    let mut best_val = f64::MIN;
    for (i, &v) in metric.values.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}
