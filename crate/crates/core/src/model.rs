//! JSON container for trained classifiers and prototype sets.
//!
//! ```json
//! {"format": "elastic-model/1", "kind": "classifier", "loss": "logistic",
//!  "rows": 2, "cols": 1, "bias": 0.5, "weights": [1.0, -2.0]}
//! ```
//!
//! Weights are stored row-major. Prototype sets use `"kind": "prototypes"`
//! with a `mode` and one `{label, rows, cols, weights}` entry per class.
//! An optional `class_labels: [negative, positive]` records the raw dataset
//! labels behind `-1` and `+1`. Floats round-trip exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::centroid::{PrototypeMode, PrototypeSet};
use crate::elastic::ElasticParams;
use crate::error::{Error, Result};
use crate::learn::{Label, LossKind};
use crate::matrix::WeightMatrix;

pub const FORMAT: &str = "elastic-model/1";

/// A trained elastic linear classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub loss: LossKind,
    pub params: ElasticParams,
}

/// Anything the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Classifier(Classifier),
    Prototypes(PrototypeSet),
}

#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl MatrixRecord {
    fn from_matrix(w: &WeightMatrix) -> Self {
        Self {
            rows: w.rows(),
            cols: w.cols(),
            weights: w.to_row_major(),
        }
    }

    fn into_matrix(self) -> Result<WeightMatrix> {
        WeightMatrix::from_row_major(self.rows, self.cols, self.weights)
            .map_err(|e| Error::Format(format!("bad weight matrix: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct PrototypeRecord {
    label: f64,
    #[serde(flatten)]
    matrix: MatrixRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Body {
    Classifier {
        loss: LossKind,
        bias: f64,
        #[serde(flatten)]
        matrix: MatrixRecord,
    },
    Prototypes {
        mode: PrototypeMode,
        prototypes: Vec<PrototypeRecord>,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_labels: Option<[f64; 2]>,
    #[serde(flatten)]
    body: Body,
}

/// A model together with the raw labels of its two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    /// Raw labels mapped to `-1` and `+1`.
    pub class_labels: Option<[f64; 2]>,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        let body = match &self.model {
            Model::Classifier(c) => Body::Classifier {
                loss: c.loss,
                bias: c.params.bias,
                matrix: MatrixRecord::from_matrix(&c.params.weights),
            },
            Model::Prototypes(set) => Body::Prototypes {
                mode: set.mode,
                prototypes: set
                    .entries
                    .iter()
                    .map(|(label, y)| PrototypeRecord {
                        label: label.sign(),
                        matrix: MatrixRecord::from_matrix(y),
                    })
                    .collect(),
            },
        };
        let env = Envelope {
            format: FORMAT.to_string(),
            class_labels: self.class_labels,
            body,
        };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if env.format != FORMAT {
            return Err(Error::Format(format!("unsupported format `{}`", env.format)));
        }
        let model = match env.body {
            Body::Classifier { loss, bias, matrix } => {
                let params = ElasticParams::new(matrix.into_matrix()?, bias)
                    .map_err(|e| Error::Format(e.to_string()))?;
                Model::Classifier(Classifier { loss, params })
            }
            Body::Prototypes { mode, prototypes } => {
                if prototypes.is_empty() {
                    return Err(Error::Format("empty prototype set".into()));
                }
                let entries = prototypes
                    .into_iter()
                    .map(|p| Ok((Label::from_sign(p.label)?, p.matrix.into_matrix()?)))
                    .collect::<Result<_>>()?;
                Model::Prototypes(PrototypeSet { mode, entries })
            }
        };
        Ok(Self {
            model,
            class_labels: env.class_labels,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Model {
    fn file(&self) -> ModelFile {
        ModelFile {
            model: self.clone(),
            class_labels: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.file().to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ModelFile::from_json(text).map(|f| f.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.file().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ModelFile::load(path).map(|f| f.model)
    }
}
