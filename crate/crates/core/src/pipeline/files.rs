//! Model and batch interchange files.
//!
//! Both are TOML documents carrying `schema_version = 1`. Weights are stored
//! class-major: `weights[k]` is the row of class `k` with `J` entries.
//!
//! ```toml
//! schema_version = 1
//! K = 2
//! J = 1
//! weights = [[1.0], [-1.0]]
//! bias = [0.5, -0.5]
//! class_labels = ["even", "odd"]   # optional
//! ```
//!
//! ```toml
//! schema_version = 1
//! J = 1
//!
//! [[inputs]]
//! id = "q0"
//! features = [2.0]
//! ```

use crate::error::{Error, Result};
use crate::evidential::LastLayerParams;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub num_classes: usize,
    #[serde(rename = "J")]
    pub num_features: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchInput {
    pub id: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchFile {
    pub schema_version: u32,
    #[serde(rename = "J")]
    pub num_features: usize,
    #[serde(default)]
    pub inputs: Vec<BatchInput>,
}

fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {version} (expected {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

impl ModelFile {
    pub fn from_params(params: &LastLayerParams) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            num_classes: params.num_classes(),
            num_features: params.num_features(),
            weights: (0..params.num_classes())
                .map(|k| params.row(k).to_vec())
                .collect(),
            bias: params.bias().to_vec(),
            class_labels: params.class_labels().map(<[String]>::to_vec),
        }
    }

    pub fn into_params(self) -> Result<LastLayerParams> {
        check_schema(self.schema_version)?;
        if self.weights.len() != self.num_classes {
            return Err(Error::dims("weights rows", self.num_classes, self.weights.len()));
        }
        for (k, row) in self.weights.iter().enumerate() {
            if row.len() != self.num_features {
                return Err(Error::dims(format!("weights row {k}"), self.num_features, row.len()));
            }
            if let Some(index) = first_non_finite(row) {
                return Err(Error::NonFinite {
                    field: format!("weights row {k}"),
                    index,
                });
            }
        }
        if self.bias.len() != self.num_classes {
            return Err(Error::dims("bias", self.num_classes, self.bias.len()));
        }
        if let Some(index) = first_non_finite(&self.bias) {
            return Err(Error::NonFinite {
                field: "bias".into(),
                index,
            });
        }
        let params = LastLayerParams::new(self.weights, self.bias)?;
        match self.class_labels {
            Some(labels) => params.with_class_labels(labels),
            None => Ok(params),
        }
    }
}

impl BatchFile {
    pub fn new(num_features: usize, inputs: Vec<BatchInput>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            num_features,
            inputs,
        }
    }

    /// Checks schema, feature lengths and id uniqueness. Feature values are
    /// validated per input when the batch runs.
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        let mut seen = HashSet::new();
        for (i, input) in self.inputs.iter().enumerate() {
            if input.features.len() != self.num_features {
                return Err(Error::dims(
                    format!("features of input {i} ({})", input.id),
                    self.num_features,
                    input.features.len(),
                ));
            }
            if !seen.insert(input.id.as_str()) {
                return Err(Error::Schema(format!("duplicate input id {:?}", input.id)));
            }
        }
        Ok(())
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn parse_model(text: &str) -> Result<LastLayerParams> {
    parse_toml::<ModelFile>(Path::new("<model>"), text)?.into_params()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LastLayerParams> {
    let path = path.as_ref();
    let file: ModelFile = parse_toml(path, &read_text(path)?)?;
    file.into_params()
}

pub fn render_model(params: &LastLayerParams) -> String {
    toml::to_string(&ModelFile::from_params(params)).expect("model serializes to TOML")
}

pub fn save_model(params: &LastLayerParams, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_model(params))
}

pub fn parse_batch(text: &str) -> Result<BatchFile> {
    let batch: BatchFile = parse_toml(Path::new("<batch>"), text)?;
    batch.validate()?;
    Ok(batch)
}

pub fn load_batch(path: impl AsRef<Path>) -> Result<BatchFile> {
    let path = path.as_ref();
    let batch: BatchFile = parse_toml(path, &read_text(path)?)?;
    batch.validate()?;
    Ok(batch)
}

pub fn render_batch(batch: &BatchFile) -> String {
    toml::to_string(batch).expect("batch serializes to TOML")
}

pub fn save_batch(batch: &BatchFile, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_batch(batch))
}
