//! Datasets: synthetic benchmark functions, CSV ingestion, scaling, splitting.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::RngSeed;

/// Regression, or classification over an ordered label set (one output per label).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification { class_labels: Vec<String> },
}

impl Task {
    pub fn is_classification(&self) -> bool {
        matches!(self, Task::Classification { .. })
    }
}

/// Paired samples: `features` is N×n, `targets` is N×m.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Matrix,
    task: Task,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Matrix, task: Task) -> Result<Self> {
        if features.rows() != targets.rows() {
            return Err(Error::shape(
                "Dataset::new",
                format!(
                    "{} feature rows vs {} target rows",
                    features.rows(),
                    targets.rows()
                ),
            ));
        }
        if features.rows() == 0 {
            return Err(Error::Data("dataset has no rows".into()));
        }
        if !features.is_finite() || !targets.is_finite() {
            return Err(Error::Data("dataset contains non-finite values".into()));
        }
        if let Task::Classification { class_labels } = &task {
            if targets.cols() != class_labels.len() {
                return Err(Error::shape(
                    "Dataset::new",
                    format!(
                        "{} target columns for {} classes",
                        targets.cols(),
                        class_labels.len()
                    ),
                ));
            }
            for (r, row) in targets.iter_rows().enumerate() {
                let ones = row.iter().filter(|&&v| v == 1.0).count();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || ones + zeros != row.len() {
                    return Err(Error::Data(format!("target row {r} is not one-hot")));
                }
            }
        }
        Ok(Dataset {
            features,
            targets,
            task,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.features.cols() {
            return Err(Error::shape(
                "with_feature_names",
                format!(
                    "{} names for {} features",
                    names.len(),
                    self.features.cols()
                ),
            ));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.cols()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Ok(Dataset {
            features: self.features.select_rows(indices),
            targets: self.targets.select_rows(indices),
            task: self.task.clone(),
            feature_names: self.feature_names.clone(),
        })
    }

    fn with_features(&self, features: Matrix) -> Dataset {
        Dataset {
            features,
            targets: self.targets.clone(),
            task: self.task.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic regression benchmarks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyntheticFunction {
    #[serde(rename = "I", alias = "i", alias = "1")]
    I,
    #[serde(rename = "II", alias = "ii", alias = "2")]
    II,
}

impl SyntheticFunction {
    pub fn dim(self) -> usize {
        match self {
            SyntheticFunction::I => 12,
            SyntheticFunction::II => 15,
        }
    }

    pub fn eval(self, x: &[f64]) -> Result<f64> {
        match self {
            SyntheticFunction::I => function_i(x),
            SyntheticFunction::II => function_ii(x),
        }
    }
}

impl std::str::FromStr for SyntheticFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(SyntheticFunction::I),
            "II" | "ii" | "2" => Ok(SyntheticFunction::II),
            other => Err(Error::Config(format!(
                "unknown synthetic function {other:?} (expected I or II)"
            ))),
        }
    }
}

fn check_dim(x: &[f64], d: usize, name: &str) -> Result<()> {
    if x.len() != d {
        return Err(Error::shape(
            "synthetic function",
            format!("{name} takes {d} inputs, got {}", x.len()),
        ));
    }
    Ok(())
}

/// `Σ xᵢ sin(xᵢ²)` over 12 coordinates.
pub fn function_i(x: &[f64]) -> Result<f64> {
    check_dim(x, 12, "function I")?;
    Ok(x.iter().map(|&v| v * (v * v).sin()).sum())
}

/// `Σ [xᵢ + (-1)^i ln(xᵢ²)]` over 15 coordinates, `i` counted from 1.
pub fn function_ii(x: &[f64]) -> Result<f64> {
    check_dim(x, 15, "function II")?;
    let mut sum = 0.0;
    for (idx, &v) in x.iter().enumerate() {
        if v == 0.0 {
            return Err(Error::Data(format!(
                "function II undefined at x_{} = 0",
                idx + 1
            )));
        }
        let sign = if (idx + 1) % 2 == 0 { 1.0 } else { -1.0 };
        sum += v + sign * (v * v).ln();
    }
    Ok(sum)
}

const SINGULAR_GUARD: f64 = 1e-12;

/// Draws `n_samples` inputs uniform on `[-2, 2]^d` with targets `f(x) + sigma·ε`.
pub fn generate_synthetic(
    which: SyntheticFunction,
    n_samples: usize,
    sigma: f64,
    seed: RngSeed,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(Error::Config(
            "synthetic sample count must be at least 1".into(),
        ));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!(
            "noise level must be finite and >= 0, got {sigma}"
        )));
    }
    let d = which.dim();
    let mut rng = seed.rng();
    let mut features = Vec::with_capacity(n_samples * d);
    let mut targets = Vec::with_capacity(n_samples);
    let mut x = vec![0.0; d];
    for _ in 0..n_samples {
        for v in x.iter_mut() {
            let mut draw: f64 = rng.random_range(-2.0..=2.0);
            if which == SyntheticFunction::II {
                while draw.abs() < SINGULAR_GUARD {
                    draw = rng.random_range(-2.0..=2.0);
                }
            }
            *v = draw;
        }
        let eps: f64 = rng.sample(StandardNormal);
        targets.push(which.eval(&x)? + sigma * eps);
        features.extend_from_slice(&x);
    }
    let names = (1..=d).map(|i| format!("x{i}")).collect();
    Dataset::new(
        Matrix::new(n_samples, d, features)?,
        Matrix::new(n_samples, 1, targets)?,
        Task::Regression,
    )?
    .with_feature_names(names)
}

// ---------------------------------------------------------------------------
// CSV

/// Target column, by header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub target: TargetColumn,
    pub task: TaskKind,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_header")]
    pub header: bool,
}

fn default_delimiter() -> char {
    ','
}

fn default_header() -> bool {
    true
}

impl CsvSchema {
    pub fn new(target: TargetColumn, task: TaskKind) -> Self {
        CsvSchema {
            target,
            task,
            delimiter: default_delimiter(),
            header: default_header(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema).map_err(|e| e.context(&path.display().to_string()))
}

/// Parses CSV text from any reader. Row numbers in errors count data rows from 1.
pub fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<Dataset> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::Config(format!(
            "delimiter {:?} is not ASCII",
            schema.delimiter
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers: Option<Vec<String>> = if schema.header {
        let h = rdr
            .headers()
            .map_err(|e| Error::Data(format!("cannot read header: {e}")))?;
        Some(h.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut width = headers.as_ref().map(Vec::len);
    let mut target_idx = None;
    let mut features = Vec::new();
    let mut raw_targets: Vec<String> = Vec::new();
    let mut rows = 0usize;

    for (i, rec) in rdr.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| Error::Data(format!("row {row_no}: {e}")))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Data(format!(
                "row {row_no}: expected {w} columns, found {}",
                rec.len()
            )));
        }
        let t = match target_idx {
            Some(t) => t,
            None => {
                let t = resolve_target(&schema.target, headers.as_deref(), w)?;
                target_idx = Some(t);
                t
            }
        };
        for (c, cell) in rec.iter().enumerate() {
            if c == t {
                raw_targets.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!(
                    "row {row_no}, column {}: non-numeric feature {cell:?}",
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "row {row_no}, column {}: non-finite feature {cell:?}",
                    c + 1
                )));
            }
            features.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Data("no data rows".into()));
    }
    let w = width.unwrap_or(0);
    let t = target_idx.unwrap_or(0);
    let n = w - 1;
    let features = Matrix::new(rows, n, features)?;

    let (targets, task) = match schema.task {
        TaskKind::Regression => {
            let mut vals = Vec::with_capacity(rows);
            for (r, cell) in raw_targets.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Data(format!(
                        "row {}, column {}: non-numeric target {cell:?}",
                        r + 1,
                        t + 1
                    ))
                })?;
                vals.push(v);
            }
            (Matrix::new(rows, 1, vals)?, Task::Regression)
        }
        TaskKind::Classification => {
            let mut labels: Vec<String> = Vec::new();
            for l in &raw_targets {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
            (
                one_hot_encode(&raw_targets, &labels)?,
                Task::Classification {
                    class_labels: labels,
                },
            )
        }
    };
    let ds = Dataset::new(features, targets, task)?;
    match headers {
        Some(h) => {
            let names = h
                .into_iter()
                .enumerate()
                .filter(|&(c, _)| c != t)
                .map(|(_, s)| s)
                .collect();
            ds.with_feature_names(names)
        }
        None => Ok(ds),
    }
}

/// Writes features then targets with a header row. Regression targets are
/// named `y` (or `y1..ym`); classification targets become one `class` label column.
pub fn write_csv(d: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Data(format!("cannot write csv: {e}"));
    let mut header: Vec<String> = match d.feature_names() {
        Some(names) => names.to_vec(),
        None => (1..=d.input_dim()).map(|i| format!("x{i}")).collect(),
    };
    let labels = match d.task() {
        Task::Classification { class_labels } => {
            header.push("class".into());
            Some(decode_one_hot(d.targets(), class_labels)?)
        }
        Task::Regression if d.output_dim() == 1 => {
            header.push("y".into());
            None
        }
        Task::Regression => {
            header.extend((1..=d.output_dim()).map(|i| format!("y{i}")));
            None
        }
    };
    w.write_record(&header).map_err(io)?;
    for r in 0..d.len() {
        let mut rec: Vec<String> = d.features().row(r).iter().map(|v| v.to_string()).collect();
        match &labels {
            Some(l) => rec.push(l[r].clone()),
            None => rec.extend(d.targets().row(r).iter().map(|v| v.to_string())),
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Data(format!("cannot write csv: {e}")))?;
    Ok(())
}

fn resolve_target(
    target: &TargetColumn,
    headers: Option<&[String]>,
    width: usize,
) -> Result<usize> {
    let idx = match target {
        TargetColumn::Index(i) => *i,
        TargetColumn::Name(name) => {
            let headers = headers.ok_or_else(|| {
                Error::Config(format!(
                    "target column {name:?} given by name but the file has no header"
                ))
            })?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Data(format!("unknown target column {name:?}")))?
        }
    };
    if idx >= width {
        return Err(Error::Data(format!(
            "target column index {idx} out of range for {width} columns"
        )));
    }
    if width < 2 {
        return Err(Error::Data(
            "need at least one feature column besides the target".into(),
        ));
    }
    Ok(idx)
}

/// One row per label with a single 1.0 at the label's position in `classes`.
pub fn one_hot_encode<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Result<Matrix> {
    let mut out = Matrix::zeros(labels.len(), classes.len());
    for (r, l) in labels.iter().enumerate() {
        let l = l.as_ref();
        let c = classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::Data(format!("label {l:?} not among known classes")))?;
        out.set(r, c, 1.0);
    }
    Ok(out)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Label of each row's argmax.
pub fn decode_one_hot(m: &Matrix, classes: &[String]) -> Result<Vec<String>> {
    if m.cols() != classes.len() {
        return Err(Error::shape(
            "decode_one_hot",
            format!("{} columns for {} classes", m.cols(), classes.len()),
        ));
    }
    Ok(m.iter_rows().map(|r| classes[argmax(r)].clone()).collect())
}

// ---------------------------------------------------------------------------
// Normalization and splitting

/// Per-feature min/max from a training set; maps `[min, max]` onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(features: &Matrix) -> Self {
        let mut min = vec![f64::INFINITY; features.cols()];
        let mut max = vec![f64::NEG_INFINITY; features.cols()];
        for row in features.iter_rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        NormalizationParams { min, max }
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.min.len() {
            return Err(Error::shape(
                "normalize",
                format!("{} features, params for {}", m.cols(), self.min.len()),
            ));
        }
        Ok(())
    }

    /// Applies the affine map. Constant training columns map to 0. No clipping.
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            let (lo, hi) = (self.min[j], self.max[j]);
            if hi > lo {
                2.0 * (m.get(i, j) - lo) / (hi - lo) - 1.0
            } else {
                0.0
            }
        }))
    }

    /// Inverse of [`apply`](Self::apply); constant columns come back as their constant.
    pub fn invert(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| {
            let (lo, hi) = (self.min[j], self.max[j]);
            if hi > lo {
                (m.get(i, j) + 1.0) * 0.5 * (hi - lo) + lo
            } else {
                lo
            }
        }))
    }
}

/// Scales features using the training set's range and applies the same map to `others`.
pub fn normalize_features(
    train: &Dataset,
    others: &[Dataset],
) -> Result<(Dataset, Vec<Dataset>, NormalizationParams)> {
    let params = NormalizationParams::fit(train.features());
    let train_n = train.with_features(params.apply(train.features())?);
    let others_n = others
        .iter()
        .map(|d| Ok(d.with_features(params.apply(d.features())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((train_n, others_n, params))
}

/// Seeded shuffle, then the first `train_count` rows train and the rest test.
pub fn split(d: &Dataset, train_count: usize, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    if train_count == 0 || train_count >= d.len() {
        return Err(Error::Config(format!(
            "train count {train_count} must lie in 1..{} for {} rows",
            d.len(),
            d.len()
        )));
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut seed.rng());
    let (a, b) = order.split_at(train_count);
    Ok((d.subset(a)?, d.subset(b)?))
}
