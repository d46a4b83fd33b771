use evsparse::pipeline::{self, Method, ResultRecord};
use evsparse::{baselines, metrics, oracle, Distribution, ErrorKind, EvidentialWeights};
use evsparse::{FeatureVector, LastLayerParams, SparseDistribution, Tolerance};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: evsparse::Error) -> PyErr {
    match err.kind() {
        ErrorKind::Io => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for evsparse::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Final linear layer feeding a softmax: class-major weights and bias.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: LastLayerParams,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (weights, bias, class_labels=None))]
    fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, class_labels: Option<Vec<String>>) -> PyResult<Self> {
        let mut inner = LastLayerParams::new(weights, bias).py_err()?;
        if let Some(labels) = class_labels {
            inner = inner.with_class_labels(labels).py_err()?;
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: pipeline::load_model(path).py_err()?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        pipeline::save_model(&self.inner, path).py_err()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.inner.num_features()
    }

    fn logits(&self, phi: Vec<f64>) -> PyResult<Vec<f64>> {
        evsparse::logits(&self.inner, &FeatureVector::new(phi).py_err()?).py_err()
    }

    /// Per-class evidential weights `w` (logits minus their mean).
    fn evidential_weights(&self, phi: Vec<f64>) -> PyResult<Vec<f64>> {
        let centered = evsparse::center_params(&self.inner).py_err()?;
        let ew = evsparse::evidential_weights(&centered, &FeatureVector::new(phi).py_err()?).py_err()?;
        Ok(ew.w().to_vec())
    }

    /// `alpha[j][k]`, feature-major.
    fn alpha_params(&self, phi: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let centered = evsparse::center_params(&self.inner).py_err()?;
        let alpha = evsparse::alpha_params(&centered, &FeatureVector::new(phi).py_err()?).py_err()?;
        Ok((0..alpha.num_features())
            .map(|j| (0..alpha.num_classes()).map(|k| alpha.get(j, k)).collect())
            .collect())
    }

    #[pyo3(signature = (phi, tol=1e-12))]
    fn sparsify(&self, phi: Vec<f64>, tol: f64) -> PyResult<PySparse> {
        let phi = FeatureVector::new(phi).py_err()?;
        Ok(evsparse::sparsify(&self.inner, &phi, Tolerance::Relative(tol))
            .py_err()?
            .into())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(num_classes={}, num_features={})",
            self.inner.num_classes(),
            self.inner.num_features()
        )
    }
}

#[pyclass(name = "SparseDistribution", frozen, get_all)]
struct PySparse {
    num_classes: usize,
    support: Vec<usize>,
    probs: Vec<f64>,
    vacuous_fallback: bool,
}

impl From<SparseDistribution> for PySparse {
    fn from(d: SparseDistribution) -> Self {
        Self {
            num_classes: d.num_classes(),
            support: d.support().to_vec(),
            probs: d.probs().to_vec(),
            vacuous_fallback: d.vacuous_fallback(),
        }
    }
}

#[pymethods]
impl PySparse {
    fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        for (&k, &p) in self.support.iter().zip(&self.probs) {
            out[k] = p;
        }
        out
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseDistribution(support={:?}, probs={:?}, vacuous_fallback={})",
            self.support,
            self.probs,
            if self.vacuous_fallback { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "ResultRecord", frozen, get_all)]
struct PyRecord {
    id: String,
    method: String,
    num_classes: usize,
    support: Vec<usize>,
    probs: Vec<f64>,
    w: Vec<f64>,
    softmax_probs: Vec<f64>,
    vacuous_fallback: bool,
    support_size: usize,
    reduction_fraction: f64,
}

impl From<ResultRecord> for PyRecord {
    fn from(r: ResultRecord) -> Self {
        Self {
            id: r.id,
            method: r.method.to_string(),
            num_classes: r.num_classes,
            support: r.support,
            probs: r.probs,
            w: r.w,
            softmax_probs: r.softmax_probs,
            vacuous_fallback: r.vacuous_fallback,
            support_size: r.support_size,
            reduction_fraction: r.reduction_fraction,
        }
    }
}

#[pyfunction]
fn softmax(logits: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(evsparse::softmax(&logits).py_err()?.probs().to_vec())
}

#[pyfunction]
fn sparsemax(logits: Vec<f64>) -> PyResult<PySparse> {
    Ok(baselines::sparsemax(&logits).py_err()?.into())
}

/// Keep mask from the sign test on `w` with an absolute tolerance.
#[pyfunction]
#[pyo3(signature = (w, tol=0.0))]
fn singleton_mass_signs(w: Vec<f64>, tol: f64) -> PyResult<Vec<bool>> {
    let ew = EvidentialWeights::from_w(w).py_err()?;
    Ok(evsparse::singleton_mass_signs(&ew, tol).keep_mask)
}

#[pyfunction]
fn singleton_masses_unnormalized(w: Vec<f64>) -> PyResult<Vec<f64>> {
    evsparse::singleton_masses_unnormalized(&EvidentialWeights::from_w(w).py_err()?).py_err()
}

/// Dense mass over all `2^K` subsets, indexed by bitmask.
#[pyfunction]
fn closed_form_mass(w: Vec<f64>) -> PyResult<Vec<f64>> {
    let m = oracle::closed_form_mass(&EvidentialWeights::from_w(w).py_err()?).py_err()?;
    Ok(m.masses().to_vec())
}

#[pyfunction]
fn fuse_feature_masses(weights: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(oracle::fuse_feature_masses(&weights).py_err()?.masses().to_vec())
}

#[pyfunction]
fn plausibility_transform(num_classes: usize, masses: Vec<f64>) -> PyResult<Vec<f64>> {
    let m = oracle::PowerSetMass::from_masses(num_classes, masses).py_err()?;
    Ok(oracle::plausibility_transform(&m).probs().to_vec())
}

/// Inputs are renormalized, so rounded probability vectors are accepted.
#[pyfunction]
fn target_distribution(p_y: Vec<f64>, p_ybar: Vec<f64>) -> PyResult<PySparse> {
    let p_y = Distribution::from_weights(p_y).py_err()?;
    let p_ybar = Distribution::from_weights(p_ybar).py_err()?;
    Ok(metrics::target_distribution(&p_y, &p_ybar).py_err()?.into())
}

#[pyfunction]
fn wasserstein1(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    metrics::wasserstein1(&p, &q).py_err()
}

#[pyfunction]
#[pyo3(signature = (p, q, eps=0.0))]
fn bhattacharyya(p: Vec<f64>, q: Vec<f64>, eps: f64) -> PyResult<f64> {
    metrics::bhattacharyya_smoothed(&p, &q, eps).py_err()
}

/// Runs a batch file through a model; per-input failures raise with the
/// first failing id.
#[pyfunction]
#[pyo3(signature = (model, inputs_path, method="evidential", tol=1e-12))]
fn run_batch(py: Python<'_>, model: &PyModel, inputs_path: &str, method: &str, tol: f64) -> PyResult<Vec<PyRecord>> {
    let method: Method = method.parse().py_err()?;
    let batch = pipeline::load_batch(inputs_path).py_err()?;
    let outcome = py
        .detach(|| pipeline::run_batch(&model.inner, &batch, method, Tolerance::Relative(tol)))
        .py_err()?;
    if let Some(f) = outcome.failures.into_iter().next() {
        return Err(PyValueError::new_err(format!("input {} ({}): {}", f.index, f.id, f.error)));
    }
    Ok(outcome.records.into_iter().map(PyRecord::from).collect())
}

#[pymodule]
fn evsparse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PySparse>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(sparsemax, m)?)?;
    m.add_function(wrap_pyfunction!(singleton_mass_signs, m)?)?;
    m.add_function(wrap_pyfunction!(singleton_masses_unnormalized, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_mass, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_feature_masses, m)?)?;
    m.add_function(wrap_pyfunction!(plausibility_transform, m)?)?;
    m.add_function(wrap_pyfunction!(target_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(bhattacharyya, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    Ok(())
}
