//! Result records and their structured (TOML) and CSV renderings.

use super::files::{parse_toml, read_text, write_text, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::evidential::{Distribution, SparseDistribution};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Evidential,
    Sparsemax,
    Softmax,
    /// Produced from a pair of reports rather than a model.
    Target,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Evidential => "evidential",
            Method::Sparsemax => "sparsemax",
            Method::Softmax => "softmax",
            Method::Target => "target",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evidential" => Ok(Method::Evidential),
            "sparsemax" => Ok(Method::Sparsemax),
            "softmax" => Ok(Method::Softmax),
            "target" => Ok(Method::Target),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" => Ok(ReportFormat::Structured),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParams(format!("unknown report format {other:?}"))),
        }
    }
}

/// One sparsified input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub id: String,
    pub method: Method,
    pub num_classes: usize,
    pub support: Vec<usize>,
    pub probs: Vec<f64>,
    pub w: Vec<f64>,
    pub softmax_probs: Vec<f64>,
    pub vacuous_fallback: bool,
    pub support_size: usize,
    pub reduction_fraction: f64,
}

impl ResultRecord {
    /// Dense length-`K` probabilities with zeros off the support.
    pub fn dense_probs(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.num_classes];
        for (&k, &p) in self.support.iter().zip(&self.probs) {
            if let Some(slot) = dense.get_mut(k) {
                *slot = p;
            }
        }
        dense
    }

    /// The record's distribution, renormalized to absorb print rounding.
    pub fn sparse(&self) -> Result<SparseDistribution> {
        let total: f64 = self.probs.iter().sum();
        SparseDistribution::new(
            self.num_classes,
            self.support.clone(),
            self.probs.iter().map(|p| p / total).collect(),
            self.vacuous_fallback,
        )
    }

    /// The unfiltered softmax distribution, renormalized.
    pub fn softmax(&self) -> Result<Distribution> {
        Distribution::from_weights(self.softmax_probs.clone())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    schema_version: u32,
    #[serde(default)]
    records: Vec<ResultRecord>,
}

/// Rounds to 9 significant digits.
fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn rounded(record: &ResultRecord) -> ResultRecord {
    ResultRecord {
        probs: record.probs.iter().copied().map(sig9).collect(),
        softmax_probs: record.softmax_probs.iter().copied().map(sig9).collect(),
        ..record.clone()
    }
}

const CSV_HEADER: [&str; 10] = [
    "id",
    "method",
    "num_classes",
    "support",
    "probs",
    "w",
    "softmax_probs",
    "vacuous_fallback",
    "support_size",
    "reduction_fraction",
];

fn join<T: fmt::Display>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn render_csv(records: &[ResultRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Schema(format!("CSV encoding failed: {e}"));
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records.iter().map(rounded) {
        writer
            .write_record([
                r.id.clone(),
                r.method.to_string(),
                r.num_classes.to_string(),
                join(&r.support),
                join(r.probs.iter().map(|p| format!("{p:.8e}"))),
                join(&r.w),
                join(r.softmax_probs.iter().map(|p| format!("{p:.8e}"))),
                r.vacuous_fallback.to_string(),
                r.support_size.to_string(),
                r.reduction_fraction.to_string(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Schema(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Renders records with a fixed field order and probabilities at 9
/// significant digits.
pub fn render_report(records: &[ResultRecord], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Structured => {
            let file = ReportFile {
                schema_version: SCHEMA_VERSION,
                records: records.iter().map(rounded).collect(),
            };
            toml::to_string(&file).map_err(|e| Error::Schema(format!("TOML encoding failed: {e}")))
        }
        ReportFormat::Csv => render_csv(records),
    }
}

pub fn write_report(records: &[ResultRecord], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_report(records, format)?)
}

pub fn parse_report(text: &str) -> Result<Vec<ResultRecord>> {
    parse_report_at(Path::new("<report>"), text)
}

fn parse_report_at(path: &Path, text: &str) -> Result<Vec<ResultRecord>> {
    let file: ReportFile = parse_toml(path, text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file.records)
}

/// Reads a structured report.
pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    parse_report_at(path, &read_text(path)?)
}
