//! Browser bindings for the ELM / ELM-LC demo page in `www/`.
//!
//! Every export returns a JSON string; errors are thrown as JS strings.

use elm_lc::experiment::{MetricKind, SplitKind, ELM_LC_NAME, ELM_NAME};
use elm_lc::{
    count_weights, make_partition, run_experiment, Dataset, ElmModel, ExperimentConfig, Matrix,
    Result, RngSeed, Task, TrialStats,
};
use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct Layout {
    pub n: usize,
    pub hidden: usize,
    pub k: usize,
    pub input_sizes: Vec<usize>,
    pub hidden_sizes: Vec<usize>,
    /// `mask[h][i]` is 1 when hidden node `h` sees input `i`.
    pub mask: Vec<Vec<u8>>,
    pub elm_lc_weights: usize,
    pub elm_weights: usize,
}

pub fn layout(n: usize, hidden: usize, k: usize) -> Result<Layout> {
    let p = make_partition(n, hidden, k)?;
    let (lc, full) = count_weights(n, hidden, k)?;
    let (input_group, hidden_group) = p.membership();
    let mask = hidden_group
        .iter()
        .map(|&hg| input_group.iter().map(|&ig| u8::from(ig == hg)).collect())
        .collect();
    Ok(Layout {
        n,
        hidden,
        k,
        input_sizes: p.input_sizes(),
        hidden_sizes: p.hidden_sizes(),
        mask,
        elm_lc_weights: lc,
        elm_weights: full,
    })
}

#[derive(Serialize)]
pub struct AlgorithmSummary {
    pub name: String,
    pub train_rmse: TrialStats,
    pub test_rmse: TrialStats,
}

#[derive(Serialize)]
pub struct Comparison {
    pub algorithms: Vec<AlgorithmSummary>,
    pub elm_lc_weights: usize,
    pub elm_weights: usize,
    pub elm_lc_wins: usize,
    pub trials: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn compare(
    function: &str,
    hidden: usize,
    k: usize,
    trials: usize,
    seed: u64,
    train: usize,
    test: usize,
    sigma: f64,
) -> Result<Comparison> {
    let function = function.trim();
    let cfg = ExperimentConfig::from_toml(&format!(
        r#"
trials = {trials}
base_seed = {seed}

[dataset]
kind = "synthetic"
function = "{function}"
train = {train}
test = {test}
sigma = {sigma:?}

[model]
hidden = {hidden}
groups = {k}
"#
    ))?;
    let report = run_experiment(&cfg)?;
    let mut algorithms = Vec::new();
    for name in [ELM_LC_NAME, ELM_NAME] {
        let a = report
            .algorithm(name)
            .ok_or_else(|| elm_lc::Error::State(format!("report has no {name} entry")))?;
        let pick = |split| {
            a.stats(split, MetricKind::Rmse)
                .cloned()
                .ok_or_else(|| elm_lc::Error::State(format!("{name} has no RMSE")))
        };
        algorithms.push(AlgorithmSummary {
            name: name.to_string(),
            train_rmse: pick(SplitKind::Train)?,
            test_rmse: pick(SplitKind::Test)?,
        });
    }
    let wins = algorithms[0]
        .test_rmse
        .per_trial
        .iter()
        .zip(&algorithms[1].test_rmse.per_trial)
        .filter(|(lc, elm)| lc < elm)
        .count();
    Ok(Comparison {
        algorithms,
        elm_lc_weights: report.weight_counts.elm_lc,
        elm_weights: report.weight_counts.elm,
        elm_lc_wins: wins,
        trials,
    })
}

#[derive(Serialize)]
pub struct Curve {
    pub samples_x: Vec<f64>,
    pub samples_y: Vec<f64>,
    pub grid_x: Vec<f64>,
    pub truth: Vec<f64>,
    pub fit: Vec<f64>,
    pub train_rmse: f64,
}

fn target_curve(x: f64) -> f64 {
    (3.0 * x).sin() + 0.5 * x
}

/// Fits a single-input ELM to samples of `sin(3x) + x/2` on `[-1, 1]` with
/// uniform noise on `[-sigma, sigma]`.
pub fn curve(hidden: usize, samples: usize, sigma: f64, seed: u64) -> Result<Curve> {
    if samples == 0 {
        return Err(elm_lc::Error::Config("need at least one sample".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(elm_lc::Error::Config(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let mut rng = RngSeed(seed).rng();
    let xs: Vec<f64> = (0..samples).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let noise: f64 = rng.random_range(-1.0..=1.0);
            target_curve(x) + sigma * noise
        })
        .collect();
    let data = Dataset::new(
        Matrix::new(samples, 1, xs.clone())?,
        Matrix::new(samples, 1, ys.clone())?,
        Task::Regression,
    )?;
    let model = ElmModel::random_init(1, hidden, None, RngSeed(seed).offset(1))?.fit(&data)?;

    let fitted = model.predict(data.features())?;
    let sse: f64 = fitted
        .as_slice()
        .iter()
        .zip(&ys)
        .map(|(p, y)| (p - y).powi(2))
        .sum();

    let grid_x: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
    let fit = model
        .predict(&Matrix::new(grid_x.len(), 1, grid_x.clone())?)?
        .into_vec();
    Ok(Curve {
        truth: grid_x.iter().map(|&x| target_curve(x)).collect(),
        samples_x: xs,
        samples_y: ys,
        grid_x,
        fit,
        train_rmse: (sse / samples as f64).sqrt(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    let value = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Group layout and weight counts for `n` inputs, `hidden` nodes and `k` groups.
#[wasm_bindgen]
pub fn partition_layout(n: usize, hidden: usize, k: usize) -> std::result::Result<String, JsValue> {
    to_js(layout(n, hidden, k))
}

/// Runs ELM-LC and ELM on a synthetic benchmark ("I" or "II").
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn compare_synthetic(
    function: &str,
    hidden: usize,
    k: usize,
    trials: usize,
    seed: u64,
    train: usize,
    test: usize,
    sigma: f64,
) -> std::result::Result<String, JsValue> {
    to_js(compare(
        function, hidden, k, trials, seed, train, test, sigma,
    ))
}

/// One-dimensional curve fit for plotting.
#[wasm_bindgen]
pub fn fit_curve(
    hidden: usize,
    samples: usize,
    sigma: f64,
    seed: u64,
) -> std::result::Result<String, JsValue> {
    to_js(curve(hidden, samples, sigma, seed))
}
