//! Regression error, classification accuracy, and per-trial aggregation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::argmax;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    #[default]
    Rmse,
    Mse,
}

impl fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMetric::Rmse => "rmse",
            ErrorMetric::Mse => "mse",
        })
    }
}

impl FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(ErrorMetric::Rmse),
            "mse" => Ok(ErrorMetric::Mse),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    if a.is_empty() {
        return Err(Error::shape(op, "empty operands"));
    }
    Ok(())
}

/// Mean squared (or root mean squared) entrywise difference.
pub fn regression_error(pred: &Matrix, target: &Matrix, metric: ErrorMetric) -> Result<f64> {
    same_shape("regression_error", pred, target)?;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let mse = sum / pred.as_slice().len() as f64;
    Ok(match metric {
        ErrorMetric::Mse => mse,
        ErrorMetric::Rmse => mse.sqrt(),
    })
}

/// Percentage of rows whose argmax agrees with the target's.
pub fn classification_accuracy(pred: &Matrix, target: &Matrix) -> Result<f64> {
    same_shape("classification_accuracy", pred, target)?;
    let hits = pred
        .iter_rows()
        .zip(target.iter_rows())
        .filter(|(p, t)| argmax(p) == argmax(t))
        .count();
    Ok(100.0 * hits as f64 / pred.rows() as f64)
}

/// Mean, max and min of one metric across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub per_trial: Vec<f64>,
}

pub fn aggregate(per_trial: &[f64]) -> Result<TrialStats> {
    if per_trial.is_empty() {
        return Err(Error::Config("cannot aggregate zero trials".into()));
    }
    let mean = per_trial.iter().sum::<f64>() / per_trial.len() as f64;
    let max = per_trial.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = per_trial.iter().cloned().fold(f64::INFINITY, f64::min);
    // rounding in the mean can step just outside [min, max] when all values agree
    Ok(TrialStats {
        mean: mean.clamp(min, max),
        max,
        min,
        per_trial: per_trial.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::seed::RngSeed;

    #[test]
    fn error_zero_and_constant_residual() {
        let t = Matrix::from_fn(4, 2, |i, j| (i + j) as f64);
        assert_eq!(regression_error(&t, &t, ErrorMetric::Rmse).unwrap(), 0.0);
        let p = t.map(|v| v + 2.0);
        assert_eq!(regression_error(&p, &t, ErrorMetric::Mse).unwrap(), 4.0);
        assert_eq!(regression_error(&p, &t, ErrorMetric::Rmse).unwrap(), 2.0);
    }

    #[test]
    fn error_matches_naive_loop() {
        let mut rng = RngSeed(4).rng();
        let p = Matrix::from_fn(37, 3, |_, _| rng.random_range(-5.0..5.0));
        let t = Matrix::from_fn(37, 3, |_, _| rng.random_range(-5.0..5.0));
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..37 {
            for j in 0..3 {
                let d = p[(i, j)] - t[(i, j)];
                acc += d * d;
                count += 1;
            }
        }
        let oracle = acc / count as f64;
        assert!((regression_error(&p, &t, ErrorMetric::Mse).unwrap() - oracle).abs() < 1e-12);
        assert!(
            (regression_error(&p, &t, ErrorMetric::Rmse).unwrap() - oracle.sqrt()).abs() < 1e-12
        );
    }

    #[test]
    fn metric_shape_errors() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(
            regression_error(&a, &b, ErrorMetric::Rmse),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            classification_accuracy(&a, &b),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn accuracy_cases() {
        let t = Matrix::identity(4);
        assert_eq!(classification_accuracy(&t, &t).unwrap(), 100.0);
        let wrong = Matrix::from_fn(4, 4, |i, j| if (i + 1) % 4 == j { 1.0 } else { 0.0 });
        assert_eq!(classification_accuracy(&wrong, &t).unwrap(), 0.0);
        let mut three = t.clone();
        three.set(3, 3, 0.0);
        three.set(3, 0, 0.9);
        assert_eq!(classification_accuracy(&three, &t).unwrap(), 75.0);
    }

    #[test]
    fn aggregate_cases() {
        let s = aggregate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.max, s.min), (2.0, 3.0, 1.0));
        let s = aggregate(&[5.0]).unwrap();
        assert_eq!((s.mean, s.max, s.min), (5.0, 5.0, 5.0));
        let s = aggregate(&[0.1; 10]).unwrap();
        assert_eq!((s.mean, s.max, s.min), (0.1, 0.1, 0.1));
        assert_eq!(s.per_trial, vec![0.1; 10]);
        assert!(matches!(aggregate(&[]), Err(Error::Config(_))));
    }

    #[test]
    fn metric_parse() {
        assert_eq!("RMSE".parse::<ErrorMetric>().unwrap(), ErrorMetric::Rmse);
        assert_eq!("mse".parse::<ErrorMetric>().unwrap(), ErrorMetric::Mse);
        assert!("mae".parse::<ErrorMetric>().is_err());
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(vals in proptest::collection::vec(-100.0f64..100.0, 2..60)) {
            let n = vals.len() / 2;
            let p = Matrix::new(n, 1, vals[..n].to_vec()).unwrap();
            let t = Matrix::new(n, 1, vals[n..2 * n].to_vec()).unwrap();
            let rmse = regression_error(&p, &t, ErrorMetric::Rmse).unwrap();
            let mse = regression_error(&p, &t, ErrorMetric::Mse).unwrap();
            prop_assert!((rmse * rmse - mse).abs() <= 1e-12 * mse.max(1.0));
        }

        #[test]
        fn metrics_permutation_invariant(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = RngSeed(seed).rng();
            let p = Matrix::from_fn(16, 3, |_, _| rng.random_range(-1.0..1.0));
            let t = Matrix::from_fn(16, 3, |i, j| if (i % 3) == j { 1.0 } else { 0.0 });
            let mut order: Vec<usize> = (0..16).collect();
            order.shuffle(&mut rng);
            let (ps, ts) = (p.select_rows(&order), t.select_rows(&order));
            prop_assert_eq!(classification_accuracy(&p, &t).unwrap(), classification_accuracy(&ps, &ts).unwrap());
            let a = regression_error(&p, &t, ErrorMetric::Mse).unwrap();
            let b = regression_error(&ps, &ts, ErrorMetric::Mse).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn accuracy_invariant_under_monotone_map(seed in any::<u64>()) {
            let mut rng = RngSeed(seed).rng();
            let p = Matrix::from_fn(20, 4, |_, _| rng.random_range(-3.0..3.0));
            let t = Matrix::from_fn(20, 4, |i, j| if (i * 7) % 4 == j { 1.0 } else { 0.0 });
            let q = p.map(|v| v.exp() * 3.0 + 1.0);
            prop_assert_eq!(classification_accuracy(&p, &t).unwrap(), classification_accuracy(&q, &t).unwrap());
        }

        #[test]
        fn aggregate_bounds(vals in proptest::collection::vec(-1e6f64..1e6, 1..30)) {
            let s = aggregate(&vals).unwrap();
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            prop_assert!((s.mean - m).abs() <= 1e-12 * m.abs().max(1.0));
        }
    }
}
