use super::files::BatchFile;
use super::report::{Method, ResultRecord};
use crate::baselines::{softmax_passthrough, sparsemax};
use crate::error::{Error, Result};
use crate::evidential::{
    center_params, evidential_weights, softmax, sparsify_detailed, FeatureVector, LastLayerParams,
    SparseDistribution, Tolerance,
};
use crate::metrics::{bhattacharyya, support_stats, target_distribution, wasserstein1};
use crate::oracle::{
    closed_form_mass, fuse_feature_masses, plausibility_transform, MAX_CLASSES, MAX_FUSE_CLASSES,
    MAX_FUSE_FEATURES,
};
use rayon::prelude::*;
use std::collections::HashMap;

/// An input that could not be processed; the rest of the batch still runs.
#[derive(Debug)]
pub struct InputFailure {
    pub index: usize,
    pub id: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub records: Vec<ResultRecord>,
    pub failures: Vec<InputFailure>,
}

impl BatchOutcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn record_from(
    id: &str,
    method: Method,
    dist: &SparseDistribution,
    w: Vec<f64>,
    softmax_probs: Vec<f64>,
) -> ResultRecord {
    let stats = support_stats(dist);
    ResultRecord {
        id: id.to_string(),
        method,
        num_classes: dist.num_classes(),
        support: dist.support().to_vec(),
        probs: dist.probs().to_vec(),
        w,
        softmax_probs,
        vacuous_fallback: dist.vacuous_fallback(),
        support_size: stats.size,
        reduction_fraction: stats.reduction_fraction,
    }
}

/// Processes one feature vector with the given output transformation.
pub fn evaluate_input(
    model: &LastLayerParams,
    id: &str,
    features: &[f64],
    method: Method,
    tol: Tolerance,
) -> Result<ResultRecord> {
    let phi = FeatureVector::new(features.to_vec())?;
    let out = sparsify_detailed(model, &phi, tol)?;
    let dist = match method {
        Method::Evidential => out.filtered,
        Method::Sparsemax => sparsemax(&out.logits)?,
        Method::Softmax => softmax_passthrough(&out.logits)?,
        Method::Target => {
            return Err(Error::InvalidParams(
                "target records are built from two reports, not from a model".into(),
            ))
        }
    };
    Ok(record_from(
        id,
        method,
        &dist,
        out.weights.w().to_vec(),
        out.softmax.probs().to_vec(),
    ))
}

/// Runs every input of `batch` through `model`. Records keep input order and
/// do not depend on the number of worker threads.
pub fn run_batch(
    model: &LastLayerParams,
    batch: &BatchFile,
    method: Method,
    tol: Tolerance,
) -> Result<BatchOutcome> {
    batch.validate()?;
    if batch.num_features != model.num_features() {
        return Err(Error::dims("batch J vs model J", model.num_features(), batch.num_features));
    }
    let results: Vec<Result<ResultRecord>> = batch
        .inputs
        .par_iter()
        .map(|input| evaluate_input(model, &input.id, &input.features, method, tol))
        .collect();

    let mut outcome = BatchOutcome::default();
    for (index, (input, result)) in batch.inputs.iter().zip(results).enumerate() {
        match result {
            Ok(record) => outcome.records.push(record),
            Err(error) => outcome.failures.push(InputFailure {
                index,
                id: input.id.clone(),
                error,
            }),
        }
    }
    Ok(outcome)
}

/// Target distributions from the softmax probabilities of two reports, paired
/// by position: `a` supplies `p(·|y)` and `b` supplies `p(·|ȳ)`.
pub fn target_records(a: &[ResultRecord], b: &[ResultRecord]) -> Result<Vec<ResultRecord>> {
    if a.len() != b.len() {
        return Err(Error::dims("report length", a.len(), b.len()));
    }
    a.iter()
        .zip(b)
        .map(|(ra, rb)| {
            let p_y = ra.softmax()?;
            let p_ybar = rb.softmax()?;
            let target = target_distribution(&p_y, &p_ybar)?;
            Ok(record_from(
                &ra.id,
                Method::Target,
                &target,
                Vec::new(),
                p_y.probs().to_vec(),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub id: String,
    pub wasserstein: f64,
    pub bhattacharyya: f64,
    pub size_a: usize,
    pub size_b: usize,
    pub reduction_a: f64,
    pub reduction_b: f64,
}

/// Distances between records sharing an id, in the order of `a`.
pub fn compare_reports(a: &[ResultRecord], b: &[ResultRecord]) -> Result<Vec<Comparison>> {
    let by_id: HashMap<&str, &ResultRecord> = b.iter().map(|r| (r.id.as_str(), r)).collect();
    a.iter()
        .filter_map(|ra| by_id.get(ra.id.as_str()).map(|rb| (ra, *rb)))
        .map(|(ra, rb)| {
            let (pa, pb) = (ra.sparse()?, rb.sparse()?);
            let (sa, sb) = (support_stats(&pa), support_stats(&pb));
            Ok(Comparison {
                id: ra.id.clone(),
                wasserstein: wasserstein1(&pa, &pb)?,
                bhattacharyya: bhattacharyya(&pa, &pb)?,
                size_a: sa.size,
                size_b: sb.size,
                reduction_a: sa.reduction_fraction,
                reduction_b: sb.reduction_fraction,
            })
        })
        .collect()
}

/// Deviations between the closed forms and the power-set oracle for one
/// input.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub id: String,
    pub num_classes: usize,
    /// `max |plausibility_transform(closed_form_mass(w)) − softmax(logits)|`.
    pub plausibility_vs_softmax: f64,
    /// `max |fuse_feature_masses − closed_form_mass|`, when within the
    /// fusion budget.
    pub fused_vs_closed: Option<f64>,
    /// Classes where the sign test and the oracle's singleton masses disagree
    /// about being nonzero.
    pub sign_mismatches: usize,
}

/// Runs the oracle equivalence checks for one input. Returns `Ok(None)` when
/// the model has more than `max_k` classes.
pub fn oracle_check(
    model: &LastLayerParams,
    id: &str,
    features: &[f64],
    max_k: usize,
) -> Result<Option<OracleCheck>> {
    let k_count = model.num_classes();
    if k_count > max_k.min(MAX_CLASSES) {
        return Ok(None);
    }
    let phi = FeatureVector::new(features.to_vec())?;
    let logits = crate::evidential::logits(model, &phi)?;
    let soft = softmax(&logits)?;
    let ew = evidential_weights(&center_params(model)?, &phi)?;
    let closed = closed_form_mass(&ew)?;

    let plausibility_vs_softmax = plausibility_transform(&closed)
        .probs()
        .iter()
        .zip(soft.probs())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));

    let j_count = model.num_features();
    let fused_vs_closed = if k_count <= MAX_FUSE_CLASSES && j_count <= MAX_FUSE_FEATURES {
        let per_feature: Vec<f64> = ew.w().iter().map(|w| w / j_count as f64).collect();
        let fused = fuse_feature_masses(&vec![per_feature; j_count])?;
        Some(fused.max_abs_diff(&closed))
    } else {
        None
    };

    let report = crate::evidential::singleton_mass_signs(&ew, 0.0);
    let sign_mismatches = (0..k_count)
        .filter(|&k| report.keep_mask[k] != (closed.singleton(k) > 0.0))
        .count();

    Ok(Some(OracleCheck {
        id: id.to_string(),
        num_classes: k_count,
        plausibility_vs_softmax,
        fused_vs_closed,
        sign_mismatches,
    }))
}
