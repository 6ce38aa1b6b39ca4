//! Extreme learning machines with local connections.
//!
//! A standard extreme learning machine maps inputs through a random,
//! fixed sigmoid hidden layer and fits only the output weights, by a
//! minimum-norm least-squares solve. The locally connected variant splits
//! the inputs and hidden nodes into `k` paired groups and connects each input
//! group only to its own hidden group, cutting the input-hidden weight count
//! from `nL` to roughly `nL/k`.
//!
//! ```
//! use elm_lc::{make_partition, ElmModel, RngSeed};
//!
//! let p = make_partition(12, 32, 4).unwrap();
//! let model = ElmModel::random_init(12, 32, Some(&p), RngSeed(7)).unwrap();
//! assert_eq!(model.count_input_hidden_weights(), 96);
//! ```

pub mod data;
pub mod elm;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod grouping;
pub mod linalg;
pub mod persist;
pub mod seed;

pub use data::{
    generate_synthetic, load_csv, normalize_features, split, write_csv, CsvSchema, Dataset,
    NormalizationParams, SyntheticFunction, TargetColumn, Task, TaskKind,
};
pub use elm::{sigmoid, Activation, ElmModel, WeightBlock, WeightInit};
pub use error::{Error, Result};
pub use eval::{aggregate, classification_accuracy, regression_error, ErrorMetric, TrialStats};
pub use experiment::{
    count_weights, emit_report, run_experiment, sweep_hidden_nodes, ExperimentConfig,
    ExperimentReport, ReportFormat,
};
pub use grouping::{make_explicit_partition, make_partition, validate, GroupPartition};
pub use linalg::{least_squares_solve, matmul, pseudoinverse, singular_values, Matrix};
pub use seed::RngSeed;
