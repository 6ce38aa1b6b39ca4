//! Experiment reports and their text renderings.
//!
//! CSV schema (one header row, then records):
//!
//! ```text
//! kind,algorithm,split,metric,index,mean,max,min,value
//! stats,ELM-LC,train,rmse,,<mean>,<max>,<min>,
//! trial,ELM-LC,train,rmse,<trial>,,,,<value>
//! weights,ELM-LC,,,,,,,<count>
//! sweep,ELM,train,<metric>,<L>,,,,<training error>
//! sweep_choice,ELM,,,<L>,,,,
//! ```
//!
//! JSON lines: one object per line, tagged by `"type"`: `config`, `dataset`,
//! `partition`, `weights`, `seeds`, `stats` (one per algorithm/split/metric),
//! then `sweep` when a sweep ran.
//!
//! Numbers are written in shortest round-trip form, so re-parsing gives the
//! exact `f64` values.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Error;
use crate::eval::{ErrorMetric, TrialStats};
use crate::grouping::GroupPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Test,
}

impl SplitKind {
    fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Rmse,
    Mse,
    Accuracy,
}

impl MetricKind {
    fn as_str(self) -> &'static str {
        match self {
            MetricKind::Rmse => "rmse",
            MetricKind::Mse => "mse",
            MetricKind::Accuracy => "accuracy",
        }
    }
}

impl From<ErrorMetric> for MetricKind {
    fn from(m: ErrorMetric) -> Self {
        match m {
            ErrorMetric::Rmse => MetricKind::Rmse,
            ErrorMetric::Mse => MetricKind::Mse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub split: SplitKind,
    pub metric: MetricKind,
    pub stats: TrialStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub name: String,
    pub metrics: Vec<MetricReport>,
}

impl AlgorithmReport {
    pub fn stats(&self, split: SplitKind, metric: MetricKind) -> Option<&TrialStats> {
        self.metrics
            .iter()
            .find(|m| m.split == split && m.metric == metric)
            .map(|m| &m.stats)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub normalized: bool,
    pub resplit_per_trial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub k: usize,
    pub input_sizes: Vec<usize>,
    pub hidden_sizes: Vec<usize>,
    pub input_groups: Vec<Vec<usize>>,
    pub hidden_groups: Vec<Vec<usize>>,
}

impl From<&GroupPartition> for PartitionSummary {
    fn from(p: &GroupPartition) -> Self {
        PartitionSummary {
            k: p.group_count(),
            input_sizes: p.input_sizes(),
            hidden_sizes: p.hidden_sizes(),
            input_groups: p.input_groups().to_vec(),
            hidden_groups: p.hidden_groups().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightCounts {
    pub elm_lc: usize,
    pub elm: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub trial: usize,
    pub seed: u64,
    pub elm: u64,
    pub elm_lc: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub hidden: usize,
    pub train_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub chosen: usize,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub hidden: usize,
    pub primary_metric: MetricKind,
    pub partition: PartitionSummary,
    pub weight_counts: WeightCounts,
    pub trial_seeds: Vec<TrialSeeds>,
    pub algorithms: Vec<AlgorithmReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
}

impl ExperimentReport {
    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    JsonLines,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json-lines" | "jsonl" => Ok(ReportFormat::JsonLines),
            other => Err(Error::Config(format!(
                "unknown report format {other:?} (table, csv, json-lines)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Table => "table",
            ReportFormat::Csv => "csv",
            ReportFormat::JsonLines => "json-lines",
        })
    }
}

pub fn emit_report(r: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(r),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::JsonLines => render_json_lines(r),
    }
}

/// Metric blocks in display order: primary metric first, train before test.
fn block_order(r: &ExperimentReport) -> Vec<(SplitKind, MetricKind)> {
    let mut metrics = vec![r.primary_metric];
    if let Some(a) = r.algorithms.first() {
        for m in &a.metrics {
            if !metrics.contains(&m.metric) {
                metrics.push(m.metric);
            }
        }
    }
    metrics
        .into_iter()
        .flat_map(|m| [(SplitKind::Train, m), (SplitKind::Test, m)])
        .collect()
}

fn block_title(split: SplitKind, metric: MetricKind) -> String {
    let which = match split {
        SplitKind::Train => "Training",
        SplitKind::Test => "Test",
    };
    match metric {
        MetricKind::Accuracy => format!("{which} accuracy (%)"),
        MetricKind::Rmse => format!("{which} error (RMSE)"),
        MetricKind::Mse => format!("{which} error (MSE)"),
    }
}

fn render_table(r: &ExperimentReport) -> String {
    let mut out = String::new();
    let name_w = r
        .algorithms
        .iter()
        .map(|a| a.name.len())
        .max()
        .unwrap_or(0)
        .max(8);
    let _ = writeln!(
        out,
        "{} ({}, n={}, L={}, k={}, {} trials, base seed {})",
        r.dataset.name,
        r.dataset.task,
        r.dataset.n_inputs,
        r.hidden,
        r.partition.k,
        r.trial_seeds.len(),
        r.config.base_seed
    );
    for (split, metric) in block_order(r) {
        let decimals = if metric == MetricKind::Accuracy { 2 } else { 4 };
        let _ = writeln!(out, "\n{}", block_title(split, metric));
        let _ = writeln!(
            out,
            "{:name_w$}  {:>12}  {:>12}  {:>12}",
            "", "Mean", "Max", "Min"
        );
        for a in &r.algorithms {
            if let Some(s) = a.stats(split, metric) {
                let _ = writeln!(
                    out,
                    "{:name_w$}  {:>12.decimals$}  {:>12.decimals$}  {:>12.decimals$}",
                    a.name, s.mean, s.max, s.min
                );
            }
        }
    }
    let _ = writeln!(out, "\nNumber of input-hidden weights");
    let _ = writeln!(
        out,
        "{:name_w$}  {:>12}",
        super::ELM_LC_NAME,
        r.weight_counts.elm_lc
    );
    let _ = writeln!(
        out,
        "{:name_w$}  {:>12}",
        super::ELM_NAME,
        r.weight_counts.elm
    );
    let _ = writeln!(
        out,
        "\nGroups: input sizes {:?}, hidden sizes {:?}",
        r.partition.input_sizes, r.partition.hidden_sizes
    );
    if let Some(s) = &r.sweep {
        let label = sweep_metric(r).as_str();
        let _ = writeln!(
            out,
            "\nHidden-node sweep ({} training {label})",
            super::ELM_NAME
        );
        let _ = writeln!(out, "{:>8}  {:>14}", "L", "error");
        for p in &s.points {
            let _ = writeln!(out, "{:>8}  {:>14.6}", p.hidden, p.train_error);
        }
        let _ = writeln!(out, "chosen L = {}", s.chosen);
    }
    out
}

fn sweep_metric(r: &ExperimentReport) -> MetricKind {
    if r.primary_metric == MetricKind::Accuracy {
        MetricKind::Accuracy
    } else {
        MetricKind::from(r.config.metric)
    }
}

fn render_csv(r: &ExperimentReport) -> String {
    let mut out = String::from("kind,algorithm,split,metric,index,mean,max,min,value\n");
    for (split, metric) in block_order(r) {
        for a in &r.algorithms {
            if let Some(s) = a.stats(split, metric) {
                let _ = writeln!(
                    out,
                    "stats,{},{},{},,{},{},{},",
                    a.name,
                    split.as_str(),
                    metric.as_str(),
                    s.mean,
                    s.max,
                    s.min
                );
            }
        }
    }
    for (split, metric) in block_order(r) {
        for a in &r.algorithms {
            if let Some(s) = a.stats(split, metric) {
                for (t, v) in s.per_trial.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "trial,{},{},{},{},,,,{}",
                        a.name,
                        split.as_str(),
                        metric.as_str(),
                        t + 1,
                        v
                    );
                }
            }
        }
    }
    let _ = writeln!(
        out,
        "weights,{},,,,,,,{}",
        super::ELM_LC_NAME,
        r.weight_counts.elm_lc
    );
    let _ = writeln!(
        out,
        "weights,{},,,,,,,{}",
        super::ELM_NAME,
        r.weight_counts.elm
    );
    if let Some(s) = &r.sweep {
        let m = sweep_metric(r).as_str();
        for p in &s.points {
            let _ = writeln!(
                out,
                "sweep,{},train,{m},{},,,,{}",
                super::ELM_NAME,
                p.hidden,
                p.train_error
            );
        }
        let _ = writeln!(out, "sweep_choice,{},,,{},,,,", super::ELM_NAME, s.chosen);
    }
    out
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line<'a> {
    Config {
        config: &'a ExperimentConfig,
    },
    Dataset {
        dataset: &'a DatasetSummary,
        hidden: usize,
        primary_metric: MetricKind,
    },
    Partition {
        partition: &'a PartitionSummary,
    },
    Weights {
        elm_lc: usize,
        elm: usize,
    },
    Seeds {
        trials: &'a [TrialSeeds],
    },
    Stats {
        algorithm: &'a str,
        split: SplitKind,
        metric: MetricKind,
        mean: f64,
        max: f64,
        min: f64,
        per_trial: &'a [f64],
    },
    Sweep {
        chosen: usize,
        points: &'a [SweepPoint],
    },
}

fn render_json_lines(r: &ExperimentReport) -> String {
    let mut lines = vec![
        Line::Config { config: &r.config },
        Line::Dataset {
            dataset: &r.dataset,
            hidden: r.hidden,
            primary_metric: r.primary_metric,
        },
        Line::Partition {
            partition: &r.partition,
        },
        Line::Weights {
            elm_lc: r.weight_counts.elm_lc,
            elm: r.weight_counts.elm,
        },
        Line::Seeds {
            trials: &r.trial_seeds,
        },
    ];
    for (split, metric) in block_order(r) {
        for a in &r.algorithms {
            if let Some(s) = a.stats(split, metric) {
                lines.push(Line::Stats {
                    algorithm: &a.name,
                    split,
                    metric,
                    mean: s.mean,
                    max: s.max,
                    min: s.min,
                    per_trial: &s.per_trial,
                });
            }
        }
    }
    if let Some(s) = &r.sweep {
        lines.push(Line::Sweep {
            chosen: s.chosen,
            points: &s.points,
        });
    }
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(&l).expect("report lines serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SyntheticFunction;
    use crate::experiment::{run_experiment, DatasetConfig, ModelConfig, SweepConfig};

    fn report(sweep: bool) -> ExperimentReport {
        let cfg = ExperimentConfig {
            dataset: DatasetConfig::Synthetic {
                function: SyntheticFunction::I,
                train: 100,
                test: 30,
                sigma: 0.5,
            },
            model: ModelConfig {
                hidden: Some(32),
                groups: Some(4),
                input_sizes: None,
                hidden_sizes: None,
                permute_inputs: false,
            },
            trials: 3,
            base_seed: 11,
            metric: ErrorMetric::Rmse,
            normalize: None,
            resplit_per_trial: None,
            rtol: 1e-12,
            weight_init: Default::default(),
            sweep: sweep.then(|| SweepConfig {
                candidates: vec![16, 32],
            }),
        };
        run_experiment(&cfg).unwrap()
    }

    #[test]
    fn table_has_two_rows_per_block() {
        let r = report(false);
        let t = emit_report(&r, ReportFormat::Table);
        let blocks: Vec<&str> = t.split("\n\n").collect();
        let metric_blocks: Vec<&&str> = blocks.iter().filter(|b| b.contains("error (")).collect();
        assert_eq!(metric_blocks.len(), 4);
        for b in metric_blocks {
            let rows = b.lines().filter(|l| l.starts_with("ELM")).count();
            assert_eq!(rows, 2, "{b}");
        }
        assert!(t.contains("Number of input-hidden weights"));
        assert!(t.contains("384") && t.contains("96"));
        assert!(!t.contains("sweep"));
        let first_block = blocks[1];
        assert!(
            first_block.starts_with("Training error (RMSE)"),
            "{first_block}"
        );
    }

    #[test]
    fn csv_values_round_trip_exactly() {
        let r = report(true);
        let text = emit_report(&r, ReportFormat::Csv);
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut seen = 0;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            assert_eq!(rec.len(), 9);
            if &rec[0] == "stats" {
                let a = r.algorithm(&rec[1]).unwrap();
                let split = if &rec[2] == "train" {
                    SplitKind::Train
                } else {
                    SplitKind::Test
                };
                let metric = match &rec[3] {
                    "rmse" => MetricKind::Rmse,
                    "mse" => MetricKind::Mse,
                    _ => MetricKind::Accuracy,
                };
                let s = a.stats(split, metric).unwrap();
                assert_eq!(rec[5].parse::<f64>().unwrap().to_bits(), s.mean.to_bits());
                assert_eq!(rec[6].parse::<f64>().unwrap().to_bits(), s.max.to_bits());
                assert_eq!(rec[7].parse::<f64>().unwrap().to_bits(), s.min.to_bits());
                seen += 1;
            }
        }
        assert_eq!(seen, 8);
        assert!(text.contains("sweep_choice,ELM,,,"));
    }

    #[test]
    fn json_lines_parse_and_omit_missing_sweep() {
        let r = report(false);
        let text = emit_report(&r, ReportFormat::JsonLines);
        let values: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(values[0]["type"], "config");
        assert!(values.iter().all(|v| v["type"] != "sweep"));
        let stats: Vec<_> = values.iter().filter(|v| v["type"] == "stats").collect();
        assert_eq!(stats.len(), 8);
        let s0 = r.algorithms[0]
            .stats(SplitKind::Train, MetricKind::Rmse)
            .unwrap();
        assert_eq!(
            stats[0]["mean"].as_f64().unwrap().to_bits(),
            s0.mean.to_bits()
        );
        let with = emit_report(&report(true), ReportFormat::JsonLines);
        assert!(with.lines().last().unwrap().contains("\"type\":\"sweep\""));
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "json-lines".parse::<ReportFormat>().unwrap(),
            ReportFormat::JsonLines
        );
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
