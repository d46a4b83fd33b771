//! Distances between class distributions and support-size diagnostics.
//!
//! The Wasserstein distance treats class indices `0..K` as points on a line
//! with unit spacing. Class indices are nominally unordered, so the number is
//! only meaningful relative to other distances computed the same way.

use crate::error::{Error, Result};
use crate::evidential::{Distribution, SparseDistribution};
use std::borrow::Cow;

/// Anything that can be read as a dense length-`K` probability vector.
pub trait DenseProbs {
    fn dense_probs(&self) -> Cow<'_, [f64]>;
}

impl DenseProbs for Distribution {
    fn dense_probs(&self) -> Cow<'_, [f64]> {
        Cow::Borrowed(self.probs())
    }
}

impl DenseProbs for SparseDistribution {
    fn dense_probs(&self) -> Cow<'_, [f64]> {
        Cow::Owned(self.to_dense())
    }
}

impl DenseProbs for [f64] {
    fn dense_probs(&self) -> Cow<'_, [f64]> {
        Cow::Borrowed(self)
    }
}

impl DenseProbs for Vec<f64> {
    fn dense_probs(&self) -> Cow<'_, [f64]> {
        Cow::Borrowed(self)
    }
}

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::dims("distribution length", p.len(), q.len()));
    }
    Ok(())
}

/// Keeps the classes where `p_y` is at least `p_ybar`, with `p_y`'s
/// probabilities renormalized over them.
pub fn target_distribution(p_y: &Distribution, p_ybar: &Distribution) -> Result<SparseDistribution> {
    same_len(p_y.probs(), p_ybar.probs())?;
    let (support, kept): (Vec<usize>, Vec<f64>) = p_y
        .probs()
        .iter()
        .zip(p_ybar.probs())
        .enumerate()
        .filter(|(_, (a, b))| a >= b && **a > 0.0)
        .map(|(k, (&a, _))| (k, a))
        .unzip();
    if support.is_empty() {
        return Err(Error::EmptySupport("target distribution".into()));
    }
    let total: f64 = kept.iter().sum();
    let probs = kept.into_iter().map(|p| p / total).collect();
    SparseDistribution::new(p_y.len(), support, probs, false)
}

/// `−ln Σ_k sqrt(p_k q_k)`; `+∞` for disjoint supports.
pub fn bhattacharyya<P, Q>(p: &P, q: &Q) -> Result<f64>
where
    P: DenseProbs + ?Sized,
    Q: DenseProbs + ?Sized,
{
    bhattacharyya_smoothed(p, q, 0.0)
}

/// Bhattacharyya distance after mixing each input with `eps` of the uniform
/// distribution, which keeps the result finite for disjoint supports.
pub fn bhattacharyya_smoothed<P, Q>(p: &P, q: &Q, eps: f64) -> Result<f64>
where
    P: DenseProbs + ?Sized,
    Q: DenseProbs + ?Sized,
{
    let (p, q) = (p.dense_probs(), q.dense_probs());
    same_len(&p, &q)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParams(format!("smoothing must lie in [0, 1), got {eps}")));
    }
    let uniform = 1.0 / p.len() as f64;
    let smooth = |v: f64| (1.0 - eps) * v + eps * uniform;
    let coefficient: f64 = p
        .iter()
        .zip(q.iter())
        .map(|(&a, &b)| (smooth(a) * smooth(b)).sqrt())
        .sum();
    if coefficient <= 0.0 {
        return Ok(f64::INFINITY);
    }
    // coefficient can exceed 1 by an ulp for identical inputs
    Ok((-coefficient.ln()).max(0.0))
}

/// 1-Wasserstein distance on unit-spaced class indices,
/// `Σ_k |CDF_p(k) − CDF_q(k)|`.
pub fn wasserstein1<P, Q>(p: &P, q: &Q) -> Result<f64>
where
    P: DenseProbs + ?Sized,
    Q: DenseProbs + ?Sized,
{
    let (p, q) = (p.dense_probs(), q.dense_probs());
    same_len(&p, &q)?;
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for (a, b) in p.iter().zip(q.iter()).take(p.len().saturating_sub(1)) {
        cdf_gap += a - b;
        total += f64::abs(cdf_gap);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportStats {
    pub size: usize,
    pub reduction_fraction: f64,
}

pub fn support_stats(d: &SparseDistribution) -> SupportStats {
    let size = d.support().len();
    SupportStats {
        size,
        reduction_fraction: 1.0 - size as f64 / d.num_classes() as f64,
    }
}
