use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{CsvSchema, SyntheticFunction, TargetColumn, TaskKind};
use crate::elm::WeightInit;
use crate::error::{Error, Result};
use crate::eval::ErrorMetric;
use crate::grouping::{make_explicit_partition, make_partition, GroupPartition};
use crate::linalg::DEFAULT_RTOL;
use crate::seed::{RngSeed, Stream};

/// Full description of a comparison run, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub metric: ErrorMetric,
    /// Min-max scale features to [-1, 1]. Defaults to on for CSV data, off for synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    /// Redraw the data (or the split) every trial. Defaults to on for synthetic, off for CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resplit_per_trial: Option<bool>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default)]
    pub weight_init: WeightInit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_trials() -> usize {
    10
}

fn default_rtol() -> f64 {
    DEFAULT_RTOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        function: SyntheticFunction,
        #[serde(default = "default_train")]
        train: usize,
        #[serde(default = "default_test")]
        test: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Csv {
        path: PathBuf,
        /// Separate test file; without it the data is split by `train_count`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_count: Option<usize>,
        target: TargetColumn,
        task: TaskKind,
        #[serde(default = "default_delimiter")]
        delimiter: char,
        #[serde(default = "default_header")]
        header: bool,
    },
}

fn default_train() -> usize {
    800
}

fn default_test() -> usize {
    200
}

fn default_sigma() -> f64 {
    0.5
}

fn default_delimiter() -> char {
    ','
}

fn default_header() -> bool {
    true
}

impl DatasetConfig {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, DatasetConfig::Synthetic { .. })
    }

    pub fn csv_schema(&self) -> Option<CsvSchema> {
        match self {
            DatasetConfig::Csv {
                target,
                task,
                delimiter,
                header,
                ..
            } => Some(CsvSchema {
                target: target.clone(),
                task: *task,
                delimiter: *delimiter,
                header: *header,
            }),
            DatasetConfig::Synthetic { .. } => None,
        }
    }

    pub fn display_name(&self) -> String {
        match self {
            DatasetConfig::Synthetic { function, .. } => format!("Function {function:?}"),
            DatasetConfig::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

/// Network size and grouping. Give either `groups` or both size lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden node count L; may be omitted when a sweep picks it or sizes imply it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_sizes: Option<Vec<usize>>,
    /// Assign features to groups through a seeded permutation instead of column order.
    #[serde(default)]
    pub permute_inputs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub candidates: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative CSV paths are taken relative to the file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization is infallible")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let DatasetConfig::Csv {
            path, test_path, ..
        } = &mut self.dataset
        {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if let Some(tp) = test_path {
                if tp.is_relative() {
                    *tp = base.join(&*tp);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.rtol >= 0.0 && self.rtol.is_finite()) {
            return Err(Error::Config(format!(
                "rtol must be finite and >= 0, got {}",
                self.rtol
            )));
        }
        if let DatasetConfig::Synthetic {
            train, test, sigma, ..
        } = &self.dataset
        {
            if *train == 0 || *test == 0 {
                return Err(Error::Config(
                    "synthetic train and test counts must be positive".into(),
                ));
            }
            if !(*sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::Config(format!(
                    "sigma must be finite and >= 0, got {sigma}"
                )));
            }
        }
        if let DatasetConfig::Csv {
            test_path: None,
            train_count: None,
            ..
        } = &self.dataset
        {
            return Err(Error::Config(
                "csv dataset needs either test_path or train_count".into(),
            ));
        }
        let m = &self.model;
        match (&m.groups, &m.input_sizes, &m.hidden_sizes) {
            (Some(0), None, None) => return Err(Error::Config("groups must be at least 1".into())),
            (Some(_), None, None) => {}
            (None, Some(i), Some(h)) => {
                if let Some(l) = m.hidden {
                    if l != h.iter().sum::<usize>() {
                        return Err(Error::Config(format!(
                            "hidden = {l} disagrees with hidden_sizes summing to {}",
                            h.iter().sum::<usize>()
                        )));
                    }
                }
                if self.sweep.is_some() {
                    return Err(Error::Config(
                        "a sweep cannot be combined with explicit group sizes".into(),
                    ));
                }
                if i.len() != h.len() {
                    return Err(Error::Config(
                        "input_sizes and hidden_sizes differ in length".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::Config(
                    "model needs either `groups` or both `input_sizes` and `hidden_sizes`".into(),
                ))
            }
        }
        if m.hidden.is_none() && self.sweep.is_none() && m.hidden_sizes.is_none() {
            return Err(Error::Config(
                "model.hidden is required unless a sweep is configured".into(),
            ));
        }
        if m.hidden == Some(0) {
            return Err(Error::Config("model.hidden must be positive".into()));
        }
        if let Some(s) = &self.sweep {
            if s.candidates.is_empty() {
                return Err(Error::Config("sweep.candidates must not be empty".into()));
            }
            if s.candidates.contains(&0) {
                return Err(Error::Config("sweep candidates must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn normalize_enabled(&self) -> bool {
        self.normalize.unwrap_or(!self.dataset.is_synthetic())
    }

    pub fn resplit_enabled(&self) -> bool {
        self.resplit_per_trial
            .unwrap_or(self.dataset.is_synthetic())
    }

    pub fn base_seed(&self) -> RngSeed {
        RngSeed(self.base_seed)
    }

    /// Seed of trial `t` (1-based): `base_seed + t`.
    pub fn trial_seed(&self, t: usize) -> RngSeed {
        self.base_seed().offset(t as u64)
    }

    /// Builds the local-connection partition for `n` inputs and `hidden` nodes.
    pub fn partition(&self, n: usize, hidden: usize) -> Result<GroupPartition> {
        let m = &self.model;
        let p = match (&m.groups, &m.input_sizes, &m.hidden_sizes) {
            (Some(k), _, _) => make_partition(n, hidden, *k)?,
            (None, Some(i), Some(h)) => {
                let p = make_explicit_partition(i, h)?;
                if p.input_count() != n || p.hidden_count() != hidden {
                    return Err(Error::Config(format!(
                        "explicit sizes cover n={}, L={} but the data has n={n} and L={hidden}",
                        p.input_count(),
                        p.hidden_count()
                    )));
                }
                p
            }
            _ => return Err(Error::Config("no grouping configured".into())),
        };
        Ok(if m.permute_inputs {
            p.with_permuted_inputs(self.base_seed().derive(Stream::Permutation).0)
        } else {
            p
        })
    }
}
