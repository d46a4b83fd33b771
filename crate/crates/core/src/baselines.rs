//! Reference output transformations to compare the evidential filter against.

use crate::error::{check_finite, Error, Result};
use crate::evidential::{softmax, SparseDistribution};

/// Euclidean projection of `logits` onto the probability simplex.
///
/// Entries that land exactly on the threshold get probability zero and are
/// left out of the support.
pub fn sparsemax(logits: &[f64]) -> Result<SparseDistribution> {
    if logits.is_empty() {
        return Err(Error::InvalidParams("empty logit vector".into()));
    }
    check_finite("logits", logits)?;
    let tau = sparsemax_threshold(logits);

    let (support, probs): (Vec<usize>, Vec<f64>) = logits
        .iter()
        .enumerate()
        .filter_map(|(k, &z)| {
            let p = z - tau;
            (p > 0.0).then_some((k, p))
        })
        .unzip();
    SparseDistribution::new(logits.len(), support, probs, false)
}

/// Threshold `τ` such that `Σ max(0, z − τ) = 1`.
pub fn sparsemax_threshold(logits: &[f64]) -> f64 {
    let mut sorted = logits.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut support_sum = sorted[0];
    let mut support_size = 1;
    for (i, &z) in sorted.iter().enumerate() {
        cumsum += z;
        let k = (i + 1) as f64;
        if 1.0 + k * z > cumsum {
            support_sum = cumsum;
            support_size = i + 1;
        }
    }
    (support_sum - 1.0) / support_size as f64
}

/// Plain softmax as a sparse distribution. Only classes whose probability
/// underflows to zero are missing from the support.
pub fn softmax_passthrough(logits: &[f64]) -> Result<SparseDistribution> {
    let dist = softmax(logits)?;
    let support: Vec<usize> = (0..dist.len()).filter(|&k| dist.probs()[k] > 0.0).collect();
    let probs: Vec<f64> = support.iter().map(|&k| dist.probs()[k]).collect();
    SparseDistribution::new(dist.len(), support, probs, false)
}
