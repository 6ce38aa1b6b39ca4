//! Multi-trial comparison of a fully connected ELM against its locally connected variant.
//!
//! Trial `t` (1-based) uses seed `base_seed + t`. From that seed, independent
//! sub-streams drive data generation, the split, the fully connected model,
//! and the grouped model, so enabling or changing one never perturbs another.

mod config;
mod report;

pub use config::{DatasetConfig, ExperimentConfig, ModelConfig, SweepConfig};
pub use report::{
    emit_report, AlgorithmReport, DatasetSummary, ExperimentReport, MetricKind, MetricReport,
    PartitionSummary, ReportFormat, SplitKind, SweepPoint, SweepReport, TrialSeeds, WeightCounts,
};

use crate::data::{generate_synthetic, load_csv, normalize_features, split, Dataset, Task};
use crate::elm::{ElmModel, WeightInit};
use crate::error::{Error, Result};
use crate::eval::{aggregate, classification_accuracy, regression_error, ErrorMetric};
use crate::grouping::{make_partition, GroupPartition};
use crate::seed::{RngSeed, Stream};

pub const ELM_NAME: &str = "ELM";
pub const ELM_LC_NAME: &str = "ELM-LC";

/// Input-hidden weight counts `(grouped, fully connected)` of freshly built models.
pub fn count_weights(n: usize, hidden: usize, k: usize) -> Result<(usize, usize)> {
    let p = make_partition(n, hidden, k)?;
    count_weights_for(&p)
}

pub fn count_weights_for(p: &GroupPartition) -> Result<(usize, usize)> {
    let (n, hidden) = (p.input_count(), p.hidden_count());
    let lc = ElmModel::random_init(n, hidden, Some(p), RngSeed(0))?;
    let full = ElmModel::random_init(n, hidden, None, RngSeed(0))?;
    Ok((
        lc.count_input_hidden_weights(),
        full.count_input_hidden_weights(),
    ))
}

/// Source data, loaded once per run.
enum Source {
    Synthetic,
    Fixed { train: Dataset, test: Dataset },
    Pool(Dataset),
}

struct Prepared<'a> {
    cfg: &'a ExperimentConfig,
    source: Source,
}

impl<'a> Prepared<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let source = match &cfg.dataset {
            DatasetConfig::Synthetic { .. } => Source::Synthetic,
            DatasetConfig::Csv {
                path,
                test_path,
                train_count,
                ..
            } => {
                let schema = cfg.dataset.csv_schema().expect("csv dataset has a schema");
                let data = load_csv(path, &schema)?;
                match (test_path, train_count) {
                    (Some(tp), _) => {
                        let test = load_csv(tp, &schema)?;
                        if test.input_dim() != data.input_dim() {
                            return Err(Error::Data(format!(
                                "train file has {} features, test file {}",
                                data.input_dim(),
                                test.input_dim()
                            )));
                        }
                        let test = align_classes(&data, test)?;
                        Source::Fixed { train: data, test }
                    }
                    (None, Some(tc)) => {
                        if *tc == 0 || *tc >= data.len() {
                            return Err(Error::Config(format!(
                                "train_count {tc} must lie in 1..{} for {} rows",
                                data.len(),
                                data.len()
                            )));
                        }
                        Source::Pool(data)
                    }
                    (None, None) => unreachable!("validated"),
                }
            }
        };
        Ok(Prepared { cfg, source })
    }

    /// Train/test data for trial `t`, normalized if configured.
    fn trial_data(&self, t: usize) -> Result<(Dataset, Dataset)> {
        let cfg = self.cfg;
        let seed = if cfg.resplit_enabled() {
            cfg.trial_seed(t)
        } else {
            cfg.base_seed()
        };
        let (train, test) = match (&self.source, &cfg.dataset) {
            (
                Source::Synthetic,
                DatasetConfig::Synthetic {
                    function,
                    train,
                    test,
                    sigma,
                },
            ) => (
                generate_synthetic(*function, *train, *sigma, seed.derive(Stream::Data))?,
                generate_synthetic(*function, *test, *sigma, seed.derive(Stream::Split))?,
            ),
            (Source::Fixed { train, test }, _) => (train.clone(), test.clone()),
            (
                Source::Pool(d),
                DatasetConfig::Csv {
                    train_count: Some(tc),
                    ..
                },
            ) => split(d, *tc, seed.derive(Stream::Split))?,
            _ => unreachable!("source matches dataset kind"),
        };
        if cfg.normalize_enabled() {
            let (train, mut others, _) = normalize_features(&train, &[test])?;
            Ok((train, others.remove(0)))
        } else {
            Ok((train, test))
        }
    }

    fn input_dim(&self) -> usize {
        match (&self.source, &self.cfg.dataset) {
            (Source::Synthetic, DatasetConfig::Synthetic { function, .. }) => function.dim(),
            (Source::Fixed { train, .. }, _) | (Source::Pool(train), _) => train.input_dim(),
            _ => unreachable!(),
        }
    }
}

/// Maps a test file's classes onto the training file's label order.
fn align_classes(train: &Dataset, test: Dataset) -> Result<Dataset> {
    match (train.task(), test.task()) {
        (Task::Classification { class_labels: tl }, Task::Classification { class_labels: sl }) => {
            if tl == sl {
                return Ok(test);
            }
            let labels = crate::data::decode_one_hot(test.targets(), sl)?;
            let targets = crate::data::one_hot_encode(&labels, tl)
                .map_err(|e| e.context("test file has a class absent from the training file"))?;
            let names = test.feature_names().map(<[String]>::to_vec);
            let d = Dataset::new(
                test.features().clone(),
                targets,
                Task::Classification {
                    class_labels: tl.clone(),
                },
            )?;
            match names {
                Some(n) => d.with_feature_names(n),
                None => Ok(d),
            }
        }
        _ => Ok(test),
    }
}

#[derive(Debug, Clone)]
struct Scores {
    /// (split, metric, value)
    values: Vec<(SplitKind, MetricKind, f64)>,
}

fn score(model: &ElmModel, train: &Dataset, test: &Dataset) -> Result<Scores> {
    let mut values = Vec::new();
    for (kind, d) in [(SplitKind::Train, train), (SplitKind::Test, test)] {
        let pred = model.predict(d.features())?;
        if d.task().is_classification() {
            values.push((
                kind,
                MetricKind::Accuracy,
                classification_accuracy(&pred, d.targets())?,
            ));
        } else {
            values.push((
                kind,
                MetricKind::Rmse,
                regression_error(&pred, d.targets(), ErrorMetric::Rmse)?,
            ));
            values.push((
                kind,
                MetricKind::Mse,
                regression_error(&pred, d.targets(), ErrorMetric::Mse)?,
            ));
        }
    }
    Ok(Scores { values })
}

struct TrialOutcome {
    seeds: TrialSeeds,
    elm: Scores,
    elm_lc: Scores,
    counts: (usize, usize),
    sizes: (usize, usize),
}

fn run_trial(
    prep: &Prepared<'_>,
    t: usize,
    hidden: usize,
    partition: &GroupPartition,
    init: WeightInit,
) -> Result<TrialOutcome> {
    let cfg = prep.cfg;
    let trial_seed = cfg.trial_seed(t);
    let (train, test) = prep
        .trial_data(t)
        .map_err(|e| e.context(&format!("trial {t}")))?;
    let n = train.input_dim();
    let elm_seed = trial_seed.derive(Stream::StandardElm);
    let lc_seed = trial_seed.derive(Stream::LocalElm);

    let elm = ElmModel::random_init_with(n, hidden, None, elm_seed, init)?
        .fit_with_rtol(&train, cfg.rtol)
        .map_err(|e| e.context(&format!("trial {t}, {ELM_NAME}")))?;
    let lc = ElmModel::random_init_with(n, hidden, Some(partition), lc_seed, init)?
        .fit_with_rtol(&train, cfg.rtol)
        .map_err(|e| e.context(&format!("trial {t}, {ELM_LC_NAME}")))?;

    Ok(TrialOutcome {
        seeds: TrialSeeds {
            trial: t,
            seed: trial_seed.0,
            elm: elm_seed.0,
            elm_lc: lc_seed.0,
        },
        elm: score(&elm, &train, &test)?,
        elm_lc: score(&lc, &train, &test)?,
        counts: (
            lc.count_input_hidden_weights(),
            elm.count_input_hidden_weights(),
        ),
        sizes: (train.len(), test.len()),
    })
}

fn collect_trials<T: Send>(
    trials: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (1..=trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (1..=trials).map(f).collect()
    }
}

fn summarize(name: &str, scores: &[&Scores]) -> Result<AlgorithmReport> {
    let mut metrics = Vec::new();
    for (i, &(split, metric, _)) in scores[0].values.iter().enumerate() {
        let per_trial: Vec<f64> = scores.iter().map(|s| s.values[i].2).collect();
        metrics.push(MetricReport {
            split,
            metric,
            stats: aggregate(&per_trial)?,
        });
    }
    Ok(AlgorithmReport {
        name: name.to_string(),
        metrics,
    })
}

/// Runs every trial for both models and aggregates the results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let prep = Prepared::new(cfg)?;
    let sweep = match &cfg.sweep {
        Some(_) => Some(sweep_prepared(&prep)?),
        None => None,
    };
    let n = prep.input_dim();
    let hidden = match (&sweep, cfg.model.hidden, &cfg.model.hidden_sizes) {
        (Some(s), _, _) => s.chosen,
        (None, Some(l), _) => l,
        (None, None, Some(h)) => h.iter().sum(),
        (None, None, None) => unreachable!("validated"),
    };
    let partition = cfg.partition(n, hidden)?;
    let init = cfg.weight_init;

    let outcomes = collect_trials(cfg.trials, |t| {
        run_trial(&prep, t, hidden, &partition, init)
    })?;

    let counts = outcomes[0].counts;
    if outcomes.iter().any(|o| o.counts != counts) {
        return Err(Error::State("weight counts changed between trials".into()));
    }
    let (lc_scores, elm_scores): (Vec<&Scores>, Vec<&Scores>) =
        outcomes.iter().map(|o| (&o.elm_lc, &o.elm)).unzip();

    let (train_size, test_size) = outcomes[0].sizes;
    let (task, classes, n_outputs) = match &cfg.dataset {
        DatasetConfig::Synthetic { .. } => ("regression".to_string(), None, 1),
        DatasetConfig::Csv { .. } => {
            let (train, _) = prep.trial_data(1)?;
            match train.task() {
                Task::Regression => ("regression".to_string(), None, train.output_dim()),
                Task::Classification { class_labels } => (
                    "classification".to_string(),
                    Some(class_labels.clone()),
                    train.output_dim(),
                ),
            }
        }
    };

    let primary_metric = if classes.is_some() {
        MetricKind::Accuracy
    } else {
        MetricKind::from(cfg.metric)
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        dataset: DatasetSummary {
            name: cfg.dataset.display_name(),
            task,
            classes,
            n_inputs: n,
            n_outputs,
            train_size,
            test_size,
            normalized: cfg.normalize_enabled(),
            resplit_per_trial: cfg.resplit_enabled(),
        },
        hidden,
        primary_metric,
        partition: PartitionSummary::from(&partition),
        weight_counts: WeightCounts {
            elm_lc: counts.0,
            elm: counts.1,
        },
        trial_seeds: outcomes.iter().map(|o| o.seeds).collect(),
        algorithms: vec![
            summarize(ELM_LC_NAME, &lc_scores)?,
            summarize(ELM_NAME, &elm_scores)?,
        ],
        sweep,
    })
}

/// Fits a fully connected ELM for each candidate hidden size on trial 1's data
/// and picks the one with the lowest training error (smaller size on ties).
/// Classification uses `100 - accuracy` as the error.
pub fn sweep_hidden_nodes(cfg: &ExperimentConfig) -> Result<SweepReport> {
    sweep_prepared(&Prepared::new(cfg)?)
}

fn sweep_prepared(prep: &Prepared<'_>) -> Result<SweepReport> {
    let cfg = prep.cfg;
    let candidates = &cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("no sweep configured".into()))?
        .candidates;
    let (train, _) = prep.trial_data(1)?;
    let seed = cfg.trial_seed(1).derive(Stream::StandardElm);
    let mut points = Vec::with_capacity(candidates.len());
    for &l in candidates {
        let model = ElmModel::random_init_with(train.input_dim(), l, None, seed, cfg.weight_init)?
            .fit_with_rtol(&train, cfg.rtol)
            .map_err(|e| e.context(&format!("sweep L={l}")))?;
        let pred = model.predict(train.features())?;
        let error = if train.task().is_classification() {
            100.0 - classification_accuracy(&pred, train.targets())?
        } else {
            regression_error(&pred, train.targets(), cfg.metric)?
        };
        points.push(SweepPoint {
            hidden: l,
            train_error: error,
        });
    }
    let best = points
        .iter()
        .min_by(|a, b| {
            a.train_error
                .total_cmp(&b.train_error)
                .then(a.hidden.cmp(&b.hidden))
        })
        .expect("candidates are non-empty");
    Ok(SweepReport {
        chosen: best.hidden,
        points,
    })
}
