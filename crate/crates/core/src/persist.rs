//! JSON model files.
//!
//! A model file is a single JSON object:
//!
//! ```text
//! { "format": "elm-lc-model", "version": 1,
//!   "n": .., "l": .., "m": .. | null, "k": ..,
//!   "activation": "sigmoid", "seed": .., "weight_init": {..},
//!   "partition": { "input_groups": [[..]..], "hidden_groups": [[..]..] } | null,
//!   "blocks": [ { "inputs": [..], "hidden": [..], "weights": {"rows","cols","data"} } ],
//!   "biases": [..], "beta": {"rows","cols","data"} | null,
//!   "normalization": { "min": [..], "max": [..] } | null }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so a save/load cycle is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormalizationParams;
use crate::elm::{Activation, ElmModel, WeightBlock, WeightInit};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::linalg::Matrix;
use crate::seed::RngSeed;

pub const MODEL_FORMAT: &str = "elm-lc-model";
pub const MODEL_VERSION: u32 = 1;

/// A model plus the feature scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: ElmModel,
    pub normalization: Option<NormalizationParams>,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    input_groups: Vec<Vec<usize>>,
    hidden_groups: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    n: usize,
    l: usize,
    m: Option<usize>,
    k: usize,
    activation: Activation,
    seed: RngSeed,
    weight_init: WeightInit,
    partition: Option<PartitionFile>,
    blocks: Vec<WeightBlock>,
    biases: Vec<f64>,
    beta: Option<Matrix>,
    normalization: Option<NormalizationParams>,
}

pub fn to_json(bundle: &ModelBundle) -> String {
    let m = &bundle.model;
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        n: m.n_inputs(),
        l: m.n_hidden(),
        m: m.n_outputs(),
        k: m.blocks().len(),
        activation: m.activation(),
        seed: m.seed(),
        weight_init: m.weight_init(),
        partition: m.partition().map(|p| PartitionFile {
            input_groups: p.input_groups().to_vec(),
            hidden_groups: p.hidden_groups().to_vec(),
        }),
        blocks: m.blocks().to_vec(),
        biases: m.biases().to_vec(),
        beta: m.beta().cloned(),
        normalization: bundle.normalization.clone(),
    };
    serde_json::to_string(&file).expect("model file serialization is infallible")
}

pub fn from_json(text: &str) -> Result<ModelBundle> {
    let f: ModelFile = serde_json::from_str(text)
        .map_err(|e| Error::Data(format!("malformed model file: {e}")))?;
    if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
        return Err(Error::Data(format!(
            "unsupported model file {:?} version {}",
            f.format, f.version
        )));
    }
    if f.k != f.blocks.len() {
        return Err(Error::Data(format!(
            "k={} but {} weight blocks",
            f.k,
            f.blocks.len()
        )));
    }
    if f.m != f.beta.as_ref().map(Matrix::cols) {
        return Err(Error::Data("m does not match beta".into()));
    }
    let partition = f
        .partition
        .map(|p| GroupPartition::from_groups(p.input_groups, p.hidden_groups, f.n, f.l))
        .transpose()?;
    if let Some(norm) = &f.normalization {
        if norm.min.len() != f.n || norm.max.len() != f.n {
            return Err(Error::Data("normalization length does not match n".into()));
        }
    }
    let model = ElmModel::from_parts(
        f.n,
        f.l,
        f.blocks,
        f.biases,
        f.beta,
        f.activation,
        partition,
        f.seed,
        f.weight_init,
    )
    .map_err(|e| Error::Data(e.to_string()))?;
    Ok(ModelBundle {
        model,
        normalization: f.normalization,
    })
}

pub fn save(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(bundle)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}
