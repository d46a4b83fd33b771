//! Evidential decomposition of a trained softmax layer.
//!
//! A softmax layer `p = softmax(W φ + b)` can be read as the Dempster fusion of
//! per-feature simple mass functions. Centering the weights and bias across
//! classes and spreading each class's net evidence evenly over the features
//! gives an evidential weight `w_k` per class with a clean sign split, so that
//! the singleton mass `m({z_k})` is nonzero exactly when `w_k > 0`. Classes
//! without direct evidence are dropped from the softmax distribution and the
//! remainder is renormalized.
//!
//! Everything on the filtering path works on signs of `w`; nothing here is
//! exponentiated except the softmax itself (with max subtraction), so logits
//! in the hundreds are handled without overflow.

use crate::error::{check_finite, Error, Result};

/// Largest `|w|` for which the unnormalized singleton masses are evaluated
/// directly.
pub const EXP_GUARD: f64 = 500.0;

/// Trained weights (class-major, `K × J`) and bias of the final linear layer
/// that feeds a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct LastLayerParams {
    num_classes: usize,
    num_features: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    class_labels: Option<Vec<String>>,
}

impl LastLayerParams {
    /// Builds parameters from one weight row per class.
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let num_classes = weights.len();
        let num_features = weights.first().map_or(0, Vec::len);
        for (k, row) in weights.iter().enumerate() {
            if row.len() != num_features {
                return Err(Error::dims(format!("weights row {k}"), num_features, row.len()));
            }
        }
        let flat = weights.into_iter().flatten().collect();
        Self::from_flat(num_classes, num_features, flat, bias)
    }

    /// Builds parameters from a row-major `K × J` buffer.
    pub fn from_flat(
        num_classes: usize,
        num_features: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if num_features < 1 {
            return Err(Error::InvalidParams("need at least 1 feature".into()));
        }
        if weights.len() != num_classes * num_features {
            return Err(Error::dims("weights", num_classes * num_features, weights.len()));
        }
        if bias.len() != num_classes {
            return Err(Error::dims("bias", num_classes, bias.len()));
        }
        check_finite("weights", &weights)?;
        check_finite("bias", &bias)?;
        Ok(Self {
            num_classes,
            num_features,
            weights,
            bias,
            class_labels: None,
        })
    }

    pub fn with_class_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_classes {
            return Err(Error::dims("class_labels", self.num_classes, labels.len()));
        }
        self.class_labels = Some(labels);
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Weight row for class `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.num_features..(k + 1) * self.num_features]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn class_labels(&self) -> Option<&[String]> {
        self.class_labels.as_deref()
    }
}

/// Activations of the last hidden layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite("features", &values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weights and bias with the per-feature class mean removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredParams {
    num_classes: usize,
    num_features: usize,
    beta: Vec<f64>,
    beta0: Vec<f64>,
}

impl CenteredParams {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn beta(&self, k: usize, j: usize) -> f64 {
        self.beta[k * self.num_features + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.beta[k * self.num_features..(k + 1) * self.num_features]
    }

    pub fn beta0(&self) -> &[f64] {
        &self.beta0
    }
}

/// Net evidential weight per class and its positive / negative parts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialWeights {
    w: Vec<f64>,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
}

impl EvidentialWeights {
    /// Splits `w` into `w⁺ = max(0, w)` and `w⁻ = max(0, −w)`.
    pub fn from_w(w: Vec<f64>) -> Result<Self> {
        check_finite("w", &w)?;
        let w_plus = w.iter().map(|&v| v.max(0.0)).collect();
        let w_minus = w.iter().map(|&v| (-v).max(0.0)).collect();
        Ok(Self { w, w_plus, w_minus })
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn w_plus(&self) -> &[f64] {
        &self.w_plus
    }

    pub fn w_minus(&self) -> &[f64] {
        &self.w_minus
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Per-feature bias terms `α_jk`, stored feature-major (`J × K`).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaParams {
    num_features: usize,
    num_classes: usize,
    alpha: Vec<f64>,
}

impl AlphaParams {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.alpha[j * self.num_classes + k]
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// `Σ_j α_jk` for every class.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.num_classes)
            .map(|k| (0..self.num_features).map(|j| self.get(j, k)).sum())
            .collect()
    }
}

/// Dense categorical distribution over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates nonnegativity and unit mass (within `1e-12·K`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_finite("probs", &probs)?;
        if probs.is_empty() {
            return Err(Error::InvalidParams("empty distribution".into()));
        }
        if let Some(index) = probs.iter().position(|&p| p < 0.0) {
            return Err(Error::InvalidParams(format!(
                "negative probability at index {index}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 * probs.len() as f64 {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self { probs })
    }

    /// Divides nonnegative finite weights by their total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_finite("weights", &weights)?;
        if let Some(index) = weights.iter().position(|&p| p < 0.0) {
            return Err(Error::InvalidParams(format!(
                "negative weight at index {index}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self::from_raw(weights.into_iter().map(|p| p / total).collect()))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Distribution stored as a support set plus the probabilities on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDistribution {
    num_classes: usize,
    support: Vec<usize>,
    probs: Vec<f64>,
    vacuous_fallback: bool,
}

impl SparseDistribution {
    pub fn new(
        num_classes: usize,
        support: Vec<usize>,
        probs: Vec<f64>,
        vacuous_fallback: bool,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport("sparse distribution".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::dims("support/probs", support.len(), probs.len()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("support must be strictly increasing".into()));
        }
        if let Some(&last) = support.last() {
            if last >= num_classes {
                return Err(Error::InvalidParams(format!(
                    "support index {last} out of range for {num_classes} classes"
                )));
            }
        }
        check_finite("probs", &probs)?;
        if let Some(index) = probs.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidParams(format!(
                "support probability at position {index} is not positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 * num_classes as f64 {
            return Err(Error::NotNormalized { total });
        }
        Ok(Self {
            num_classes,
            support,
            probs,
            vacuous_fallback,
        })
    }

    /// Keeps the strictly positive entries of a dense vector, renormalized.
    pub(crate) fn from_dense_positive(dense: &[f64], vacuous_fallback: bool) -> Result<Self> {
        let (support, kept): (Vec<usize>, Vec<f64>) = dense
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, &p)| (k, p))
            .unzip();
        let total: f64 = kept.iter().sum();
        let probs = kept.into_iter().map(|p| p / total).collect();
        Self::new(dense.len(), support, probs, vacuous_fallback)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vacuous_fallback(&self) -> bool {
        self.vacuous_fallback
    }

    /// Dense length-`K` view with zeros off the support.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.num_classes];
        for (&k, &p) in self.support.iter().zip(&self.probs) {
            dense[k] = p;
        }
        dense
    }

    pub fn prob_of(&self, class: usize) -> f64 {
        self.support
            .binary_search(&class)
            .map_or(0.0, |pos| self.probs[pos])
    }
}

/// Outcome of the sign test on the unnormalized singleton masses.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletonMassReport {
    pub keep_mask: Vec<bool>,
    pub log_scale_w: Vec<f64>,
    pub all_vacuous: bool,
}

impl SingletonMassReport {
    pub fn kept(&self) -> Vec<usize> {
        self.keep_mask
            .iter()
            .enumerate()
            .filter_map(|(k, &keep)| keep.then_some(k))
            .collect()
    }
}

/// Threshold below which an evidential weight counts as "no direct evidence".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Used as is.
    Absolute(f64),
    /// Scaled by `max(1, max|w|)`.
    Relative(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(1e-12)
    }
}

impl Tolerance {
    pub fn resolve(self, ew: &EvidentialWeights) -> Result<f64> {
        let (raw, tol) = match self {
            Tolerance::Absolute(t) => (t, t),
            Tolerance::Relative(t) => (t, t * ew.max_abs().max(1.0)),
        };
        if !raw.is_finite() || raw < 0.0 {
            return Err(Error::InvalidParams(format!(
                "tolerance must be finite and nonnegative, got {raw}"
            )));
        }
        Ok(tol)
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(best, best_v), (k, &v)| {
            if v > best_v {
                (k, v)
            } else {
                (best, best_v)
            }
        })
        .0
}

fn check_features(expected: usize, phi: &FeatureVector) -> Result<()> {
    if phi.len() != expected {
        return Err(Error::dims("feature vector", expected, phi.len()));
    }
    Ok(())
}

/// Removes the class mean from every weight column and from the bias.
pub fn center_params(raw: &LastLayerParams) -> Result<CenteredParams> {
    let k_count = raw.num_classes;
    let j_count = raw.num_features;
    let inv_k = 1.0 / k_count as f64;

    let mut col_mean = vec![0.0; j_count];
    for k in 0..k_count {
        for (mean, &b) in col_mean.iter_mut().zip(raw.row(k)) {
            *mean += b;
        }
    }
    col_mean.iter_mut().for_each(|m| *m *= inv_k);

    let beta: Vec<f64> = (0..k_count)
        .flat_map(|k| raw.row(k).iter().zip(&col_mean).map(|(&b, &m)| b - m))
        .collect();
    let bias_mean = raw.bias.iter().sum::<f64>() * inv_k;
    let beta0: Vec<f64> = raw.bias.iter().map(|&b| b - bias_mean).collect();

    check_finite("centered weights", &beta)?;
    check_finite("centered bias", &beta0)?;
    Ok(CenteredParams {
        num_classes: k_count,
        num_features: j_count,
        beta,
        beta0,
    })
}

/// Affine pre-softmax scores `b_k + Σ_j W_kj φ_j`.
pub fn logits(raw: &LastLayerParams, phi: &FeatureVector) -> Result<Vec<f64>> {
    check_features(raw.num_features, phi)?;
    let out: Vec<f64> = (0..raw.num_classes)
        .map(|k| raw.bias[k] + dot(raw.row(k), phi.values()))
        .collect();
    check_finite("logits", &out)?;
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Result<Distribution> {
    if logits.is_empty() {
        return Err(Error::InvalidParams("empty logit vector".into()));
    }
    check_finite("logits", logits)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(Distribution::from_raw(
        exps.into_iter().map(|e| e / total).collect(),
    ))
}

/// Per-class evidential weights `w_k = β_0k + Σ_j β_jk φ_j` from centered
/// parameters.
pub fn evidential_weights(centered: &CenteredParams, phi: &FeatureVector) -> Result<EvidentialWeights> {
    check_features(centered.num_features, phi)?;
    let w = (0..centered.num_classes)
        .map(|k| centered.beta0[k] + dot(centered.row(k), phi.values()))
        .collect();
    EvidentialWeights::from_w(w)
}

/// Input-dependent bias terms that make the per-feature weight independent of
/// the feature index.
pub fn alpha_params(centered: &CenteredParams, phi: &FeatureVector) -> Result<AlphaParams> {
    check_features(centered.num_features, phi)?;
    let j_count = centered.num_features;
    let k_count = centered.num_classes;
    let inv_j = 1.0 / j_count as f64;
    let per_class: Vec<f64> = (0..k_count)
        .map(|k| inv_j * (centered.beta0[k] + dot(centered.row(k), phi.values())))
        .collect();
    let mut alpha = vec![0.0; j_count * k_count];
    for j in 0..j_count {
        for k in 0..k_count {
            alpha[j * k_count + k] = per_class[k] - centered.beta(k, j) * phi.values()[j];
        }
    }
    check_finite("alpha", &alpha)?;
    Ok(AlphaParams {
        num_features: j_count,
        num_classes: k_count,
        alpha,
    })
}

/// Decides which singleton masses are nonzero from the signs of `w` alone.
///
/// `m({z_k}) > 0` iff `w⁺_k > tol`, or `w⁻_ℓ > tol` for every other class `ℓ`.
pub fn singleton_mass_signs(ew: &EvidentialWeights, tol: f64) -> SingletonMassReport {
    let k_count = ew.len();
    let strong_against = ew.w_minus.iter().filter(|&&m| m > tol).count();
    let keep_mask: Vec<bool> = (0..k_count)
        .map(|k| {
            let own_against = usize::from(ew.w_minus[k] > tol);
            ew.w_plus[k] > tol || strong_against - own_against == k_count - 1
        })
        .collect();
    let all_vacuous = !keep_mask.iter().any(|&keep| keep);
    SingletonMassReport {
        keep_mask,
        log_scale_w: ew.w.clone(),
        all_vacuous,
    }
}

/// `e^{−w⁻_k}(e^{w⁺_k} − 1 + Π_{ℓ≠k}(1 − e^{−w⁻_ℓ}))` per class, without the
/// normalization constant.
pub fn singleton_masses_unnormalized(ew: &EvidentialWeights) -> Result<Vec<f64>> {
    let max_abs = ew.max_abs();
    if max_abs > EXP_GUARD {
        return Err(Error::OverflowGuard {
            max_abs,
            limit: EXP_GUARD,
        });
    }
    let against: Vec<f64> = ew.w_minus.iter().map(|&m| -(-m).exp_m1()).collect();
    Ok((0..ew.len())
        .map(|k| {
            let others: f64 = against
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, &a)| a)
                .product();
            (-ew.w_minus[k]).exp() * (ew.w_plus[k].exp_m1() + others)
        })
        .collect())
}

/// Drops classes with zero singleton mass and renormalizes. When every
/// singleton mass is zero the softmax distribution is returned unchanged with
/// `vacuous_fallback` set.
///
/// Kept classes whose softmax probability underflowed to exactly zero are left
/// out of the support.
pub fn filter_distribution(
    softmax_dist: &Distribution,
    report: &SingletonMassReport,
) -> Result<SparseDistribution> {
    if softmax_dist.len() != report.keep_mask.len() {
        return Err(Error::dims(
            "keep mask",
            softmax_dist.len(),
            report.keep_mask.len(),
        ));
    }
    if report.all_vacuous {
        return SparseDistribution::from_dense_positive(&softmax_dist.probs, true);
    }
    let masked: Vec<f64> = softmax_dist
        .probs
        .iter()
        .zip(&report.keep_mask)
        .map(|(&p, &keep)| if keep { p } else { 0.0 })
        .collect();
    SparseDistribution::from_dense_positive(&masked, false)
}

/// Every intermediate of one end-to-end sparsification.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsifyOutput {
    pub logits: Vec<f64>,
    pub softmax: Distribution,
    pub weights: EvidentialWeights,
    pub report: SingletonMassReport,
    pub filtered: SparseDistribution,
}

/// Center, compute `w`, sign-test the singleton masses and filter the softmax.
pub fn sparsify_detailed(
    raw: &LastLayerParams,
    phi: &FeatureVector,
    tol: Tolerance,
) -> Result<SparsifyOutput> {
    let logits = logits(raw, phi)?;
    let softmax = softmax(&logits)?;
    let centered = center_params(raw)?;
    let weights = evidential_weights(&centered, phi)?;
    let report = singleton_mass_signs(&weights, tol.resolve(&weights)?);
    let filtered = filter_distribution(&softmax, &report)?;
    Ok(SparsifyOutput {
        logits,
        softmax,
        weights,
        report,
        filtered,
    })
}

pub fn sparsify(raw: &LastLayerParams, phi: &FeatureVector, tol: Tolerance) -> Result<SparseDistribution> {
    sparsify_detailed(raw, phi, tol).map(|out| out.filtered)
}
