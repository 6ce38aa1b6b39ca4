//! Extreme learning machine with optional local (block) input-hidden connections.
//!
//! Input-hidden weights are stored as one dense block per group together with
//! the input and hidden indices the block connects. A standard, fully
//! connected ELM is the single-block case. Entries outside every block are
//! structurally zero and never materialised.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::grouping::{validate, GroupPartition};
use crate::linalg::{least_squares_solve_with_rtol, matmul, Matrix, DEFAULT_RTOL};
use crate::seed::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
        }
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Distribution of the random input-hidden weights and hidden biases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightInit {
    /// Uniform on `[-scale, scale]`.
    Uniform { scale: f64 },
    /// Zero-mean normal.
    Gaussian { std_dev: f64 },
}

impl Default for WeightInit {
    fn default() -> Self {
        WeightInit::Uniform { scale: 1.0 }
    }
}

impl WeightInit {
    fn validate(&self) -> Result<()> {
        let v = match *self {
            WeightInit::Uniform { scale } => scale,
            WeightInit::Gaussian { std_dev } => std_dev,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!(
                "weight distribution parameter must be positive, got {v}"
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            WeightInit::Uniform { scale } => rng.random_range(-scale..=scale),
            WeightInit::Gaussian { std_dev } => std_dev * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

/// Dense weights from `inputs` (rows) to `hidden` (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBlock {
    pub inputs: Vec<usize>,
    pub hidden: Vec<usize>,
    pub weights: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    n_inputs: usize,
    n_hidden: usize,
    blocks: Vec<WeightBlock>,
    biases: Vec<f64>,
    beta: Option<Matrix>,
    activation: Activation,
    partition: Option<GroupPartition>,
    seed: RngSeed,
    init: WeightInit,
}

impl ElmModel {
    /// Random model with uniform `[-1, 1]` weights and biases.
    pub fn random_init(
        n_inputs: usize,
        n_hidden: usize,
        partition: Option<&GroupPartition>,
        seed: RngSeed,
    ) -> Result<Self> {
        Self::random_init_with(n_inputs, n_hidden, partition, seed, WeightInit::default())
    }

    /// Draws weights group by group. Within a group: every weight, hidden node
    /// by hidden node (inputs innermost), then that group's biases. Without a
    /// partition the whole network is one group, so a one-group partition and
    /// no partition consume the random stream identically.
    pub fn random_init_with(
        n_inputs: usize,
        n_hidden: usize,
        partition: Option<&GroupPartition>,
        seed: RngSeed,
        init: WeightInit,
    ) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 {
            return Err(Error::Config(format!(
                "network needs n >= 1 and L >= 1, got n={n_inputs}, L={n_hidden}"
            )));
        }
        init.validate()?;
        if let Some(p) = partition {
            validate(p, n_inputs, n_hidden).map_err(|r| {
                Error::Config(format!(
                    "partition does not fit n={n_inputs}, L={n_hidden}: {r}"
                ))
            })?;
        }
        let groups: Vec<(Vec<usize>, Vec<usize>)> = match partition {
            Some(p) => p.pairs().map(|(i, h)| (i.to_vec(), h.to_vec())).collect(),
            None => vec![((0..n_inputs).collect(), (0..n_hidden).collect())],
        };

        let mut rng = seed.rng();
        let mut biases = vec![0.0; n_hidden];
        let mut blocks = Vec::with_capacity(groups.len());
        for (inputs, hidden) in groups {
            let mut weights = Matrix::zeros(inputs.len(), hidden.len());
            for c in 0..hidden.len() {
                for r in 0..inputs.len() {
                    weights.set(r, c, init.draw(&mut rng));
                }
            }
            for &h in &hidden {
                biases[h] = init.draw(&mut rng);
            }
            blocks.push(WeightBlock {
                inputs,
                hidden,
                weights,
            });
        }
        Ok(ElmModel {
            n_inputs,
            n_hidden,
            blocks,
            biases,
            beta: None,
            activation: Activation::Sigmoid,
            partition: partition.cloned(),
            seed,
            init,
        })
    }

    /// Assembles a model from explicit parts, checking every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        n_inputs: usize,
        n_hidden: usize,
        blocks: Vec<WeightBlock>,
        biases: Vec<f64>,
        beta: Option<Matrix>,
        activation: Activation,
        partition: Option<GroupPartition>,
        seed: RngSeed,
        init: WeightInit,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::Config(format!("inconsistent model: {m}")));
        if n_inputs == 0 || n_hidden == 0 {
            return bad("n and L must be positive".into());
        }
        if biases.len() != n_hidden {
            return bad(format!(
                "{} biases for {n_hidden} hidden nodes",
                biases.len()
            ));
        }
        let mut seen_in = vec![false; n_inputs];
        let mut seen_hid = vec![false; n_hidden];
        for (g, b) in blocks.iter().enumerate() {
            if b.weights.shape() != (b.inputs.len(), b.hidden.len()) {
                return bad(format!("block {g} weights do not match its index lists"));
            }
            for &i in &b.inputs {
                if i >= n_inputs || std::mem::replace(&mut seen_in[i], true) {
                    return bad(format!(
                        "block {g} input index {i} out of range or repeated"
                    ));
                }
            }
            for &h in &b.hidden {
                if h >= n_hidden || std::mem::replace(&mut seen_hid[h], true) {
                    return bad(format!(
                        "block {g} hidden index {h} out of range or repeated"
                    ));
                }
            }
        }
        if seen_in.contains(&false) || seen_hid.contains(&false) {
            return bad("blocks do not cover every node".into());
        }
        match &partition {
            Some(p) => {
                let matches = p.group_count() == blocks.len()
                    && p.pairs()
                        .zip(&blocks)
                        .all(|((i, h), b)| i == b.inputs.as_slice() && h == b.hidden.as_slice());
                if !matches {
                    return bad("blocks do not follow the partition".into());
                }
            }
            None if blocks.len() != 1 => {
                return bad("a model without a partition has exactly one block".into())
            }
            None => {}
        }
        if let Some(b) = &beta {
            if b.rows() != n_hidden || b.cols() == 0 {
                return bad(format!(
                    "beta is {}x{}, need {n_hidden} rows",
                    b.rows(),
                    b.cols()
                ));
            }
        }
        Ok(ElmModel {
            n_inputs,
            n_hidden,
            blocks,
            biases,
            beta,
            activation,
            partition,
            seed,
            init,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// Output dimension, known once fitted.
    pub fn n_outputs(&self) -> Option<usize> {
        self.beta.as_ref().map(Matrix::cols)
    }

    pub fn blocks(&self) -> &[WeightBlock] {
        &self.blocks
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn beta(&self) -> Option<&Matrix> {
        self.beta.as_ref()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn partition(&self) -> Option<&GroupPartition> {
        self.partition.as_ref()
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn weight_init(&self) -> WeightInit {
        self.init
    }

    /// Dense n×L view; column `i` holds the incoming weights of hidden node `i`.
    pub fn input_weights_dense(&self) -> Matrix {
        let mut w = Matrix::zeros(self.n_inputs, self.n_hidden);
        for b in &self.blocks {
            for (r, &i) in b.inputs.iter().enumerate() {
                for (c, &h) in b.hidden.iter().enumerate() {
                    w.set(i, h, b.weights.get(r, c));
                }
            }
        }
        w
    }

    /// Structurally present input-hidden weights (`nL` when fully connected).
    pub fn count_input_hidden_weights(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.inputs.len() * b.hidden.len())
            .sum()
    }

    /// N×L matrix of activations `g(w_i · x_j + b_i)`.
    pub fn hidden_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_inputs {
            return Err(Error::shape(
                "hidden_matrix",
                format!(
                    "inputs have {} columns, model expects {}",
                    x.cols(),
                    self.n_inputs
                ),
            ));
        }
        let mut h = Matrix::zeros(x.rows(), self.n_hidden);
        let full = self.blocks.len() == 1;
        for b in &self.blocks {
            let z = if full && is_identity_order(&b.inputs) {
                matmul(x, &b.weights)?
            } else {
                matmul(&x.select_columns(&b.inputs), &b.weights)?
            };
            for r in 0..x.rows() {
                for (c, &hid) in b.hidden.iter().enumerate() {
                    h.set(
                        r,
                        hid,
                        self.activation.apply(z.get(r, c) + self.biases[hid]),
                    );
                }
            }
        }
        Ok(h)
    }

    /// Solves for the output weights on `train`; input weights and biases are kept.
    pub fn fit(&self, train: &Dataset) -> Result<ElmModel> {
        self.fit_with_rtol(train, DEFAULT_RTOL)
    }

    pub fn fit_with_rtol(&self, train: &Dataset, rtol: f64) -> Result<ElmModel> {
        self.fit_matrices(train.features(), train.targets(), rtol)
    }

    pub fn fit_matrices(&self, features: &Matrix, targets: &Matrix, rtol: f64) -> Result<ElmModel> {
        if features.rows() != targets.rows() {
            return Err(Error::shape(
                "fit",
                format!(
                    "{} feature rows vs {} target rows",
                    features.rows(),
                    targets.rows()
                ),
            ));
        }
        let h = self.hidden_matrix(features)?;
        let beta = least_squares_solve_with_rtol(&h, targets, rtol)?;
        Ok(ElmModel {
            beta: Some(beta),
            ..self.clone()
        })
    }

    /// N×m network outputs `H(x) β`.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let beta = self
            .beta
            .as_ref()
            .ok_or_else(|| Error::State("model has not been fitted".into()))?;
        matmul(&self.hidden_matrix(x)?, beta)
    }
}

fn is_identity_order(idx: &[usize]) -> bool {
    idx.iter().enumerate().all(|(i, &v)| i == v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::grouping::{make_explicit_partition, make_partition};
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_matrix(rows: usize, cols: usize, seed: u64, lo: f64, hi: f64) -> Matrix {
        let mut rng = RngSeed(seed).rng();
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
    }

    fn regression(x: Matrix, y: Matrix) -> Dataset {
        Dataset::new(x, y, Task::Regression).unwrap()
    }

    fn single_node(w: &[f64], b: f64, beta: Option<f64>) -> ElmModel {
        ElmModel::from_parts(
            w.len(),
            1,
            vec![WeightBlock {
                inputs: (0..w.len()).collect(),
                hidden: vec![0],
                weights: Matrix::new(w.len(), 1, w.to_vec()).unwrap(),
            }],
            vec![b],
            beta.map(|v| Matrix::new(1, 1, vec![v]).unwrap()),
            Activation::Sigmoid,
            None,
            RngSeed(0),
            WeightInit::default(),
        )
        .unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        let s = sigmoid(-1000.0);
        assert!((0.0..=1e-300).contains(&s));
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn init_is_deterministic() {
        let a = ElmModel::random_init(2, 3, None, RngSeed(17)).unwrap();
        let b = ElmModel::random_init(2, 3, None, RngSeed(17)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, ElmModel::random_init(2, 3, None, RngSeed(18)).unwrap());
    }

    #[test]
    fn init_ranges() {
        let m = ElmModel::random_init(12, 32, None, RngSeed(1)).unwrap();
        let w = m.input_weights_dense();
        assert!(w.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(m.biases().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(m.beta().is_none());
    }

    #[test]
    fn nonzero_counts_for_function_one_layout() {
        let p = make_partition(12, 32, 4).unwrap();
        let lc = ElmModel::random_init(12, 32, Some(&p), RngSeed(5)).unwrap();
        let dense = lc.input_weights_dense();
        assert_eq!(dense.as_slice().iter().filter(|&&v| v != 0.0).count(), 96);
        assert_eq!(lc.count_input_hidden_weights(), 96);
        let full = ElmModel::random_init(12, 32, None, RngSeed(5)).unwrap();
        let dense = full.input_weights_dense();
        assert_eq!(dense.as_slice().iter().filter(|&&v| v != 0.0).count(), 384);
        assert_eq!(full.count_input_hidden_weights(), 384);
    }

    #[test]
    fn weight_counts_for_reported_layouts() {
        for (n, l, k, lc, full) in [
            (15, 30, 5, 90, 450),
            (27, 36, 9, 108, 972),
            (34, 51, 17, 102, 1734),
        ] {
            let p = make_partition(n, l, k).unwrap();
            let m = ElmModel::random_init(n, l, Some(&p), RngSeed(0)).unwrap();
            assert_eq!(m.count_input_hidden_weights(), lc);
            let m = ElmModel::random_init(n, l, None, RngSeed(0)).unwrap();
            assert_eq!(m.count_input_hidden_weights(), full);
        }
    }

    #[test]
    fn partition_mismatch_is_config_error() {
        let p = make_partition(12, 32, 4).unwrap();
        let err = ElmModel::random_init(13, 32, Some(&p), RngSeed(0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(ElmModel::random_init(0, 3, None, RngSeed(0)).is_err());
    }

    #[test]
    fn zero_weights_give_half() {
        let m = ElmModel::random_init(3, 4, None, RngSeed(0)).unwrap();
        let zeroed = ElmModel::from_parts(
            3,
            4,
            vec![WeightBlock {
                inputs: vec![0, 1, 2],
                hidden: vec![0, 1, 2, 3],
                weights: Matrix::zeros(3, 4),
            }],
            vec![0.0; 4],
            None,
            m.activation(),
            None,
            m.seed(),
            m.weight_init(),
        )
        .unwrap();
        let x = uniform_matrix(5, 3, 9, -2.0, 2.0);
        let h = zeroed.hidden_matrix(&x).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn orthogonal_input_gives_half() {
        let m = single_node(&[1.0, 0.0], 0.0, None);
        let h = m
            .hidden_matrix(&Matrix::from_rows(&[[0.0, 7.0]]).unwrap())
            .unwrap();
        assert_eq!(h, Matrix::from_rows(&[[0.5]]).unwrap());
    }

    #[test]
    fn hidden_matrix_matches_scalar_oracle() {
        for partition in [
            None,
            Some(make_explicit_partition(&[1, 1], &[2, 2]).unwrap()),
        ] {
            let m = ElmModel::random_init(2, 4, partition.as_ref(), RngSeed(12)).unwrap();
            let x = uniform_matrix(3, 2, 13, -2.0, 2.0);
            let h = m.hidden_matrix(&x).unwrap();
            let w = m.input_weights_dense();
            for j in 0..3 {
                for i in 0..4 {
                    let z: f64 =
                        (0..2).map(|p| w.get(p, i) * x.get(j, p)).sum::<f64>() + m.biases()[i];
                    let oracle = 1.0 / (1.0 + (-z).exp());
                    assert!((h.get(j, i) - oracle).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn hidden_matrix_shape_error() {
        let m = ElmModel::random_init(3, 4, None, RngSeed(0)).unwrap();
        assert!(matches!(
            m.hidden_matrix(&Matrix::zeros(2, 2)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn fit_interpolates_when_hidden_exceeds_samples() {
        let x = uniform_matrix(5, 3, 20, -1.0, 1.0);
        let t = uniform_matrix(5, 1, 21, -1.0, 1.0);
        let m = ElmModel::random_init(3, 8, None, RngSeed(22)).unwrap();
        let fitted = m.fit(&regression(x.clone(), t.clone())).unwrap();
        let h = fitted.hidden_matrix(&x).unwrap();
        let resid = matmul(&h, fitted.beta().unwrap()).unwrap().sub(&t).unwrap();
        assert!(resid.frobenius_norm() < 1e-6);
        let pred = fitted.predict(&x).unwrap();
        assert!(pred
            .sub(&t)
            .unwrap()
            .as_slice()
            .iter()
            .all(|v| v.abs() < 1e-6));
        assert_eq!(fitted.blocks(), m.blocks());
        assert_eq!(fitted.biases(), m.biases());
    }

    #[test]
    fn fit_zero_targets_gives_zero_beta() {
        let x = uniform_matrix(10, 3, 30, -1.0, 1.0);
        let m = ElmModel::random_init(3, 6, None, RngSeed(31)).unwrap();
        let fitted = m.fit(&regression(x, Matrix::zeros(10, 2))).unwrap();
        assert!(fitted.beta().unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fit_invariant_under_row_duplication() {
        let x = uniform_matrix(20, 4, 40, -1.0, 1.0);
        let t = uniform_matrix(20, 1, 41, -1.0, 1.0);
        let m = ElmModel::random_init(4, 7, None, RngSeed(42)).unwrap();
        let once = m.fit(&regression(x.clone(), t.clone())).unwrap();
        let twice = m
            .fit(&regression(x.vstack(&x).unwrap(), t.vstack(&t).unwrap()))
            .unwrap();
        let diff = once.beta().unwrap().sub(twice.beta().unwrap()).unwrap();
        assert!(diff.frobenius_norm() < 1e-8, "{}", diff.frobenius_norm());
    }

    #[test]
    fn predict_requires_fit() {
        let m = ElmModel::random_init(2, 3, None, RngSeed(0)).unwrap();
        assert!(matches!(
            m.predict(&Matrix::zeros(1, 2)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn predict_with_zero_beta_is_zero() {
        let m = single_node(&[0.3, -0.2], 0.1, Some(0.0));
        let out = m.predict(&uniform_matrix(4, 2, 5, -2.0, 2.0)).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn predict_single_node_scalar_oracle() {
        let m = single_node(&[0.3, -0.2], 0.1, Some(2.0));
        let x = uniform_matrix(4, 2, 6, -2.0, 2.0);
        let out = m.predict(&x).unwrap();
        for j in 0..4 {
            let z = 0.3 * x.get(j, 0) - 0.2 * x.get(j, 1) + 0.1;
            assert!((out.get(j, 0) - 2.0 * sigmoid(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn single_group_matches_fully_connected() {
        let p = make_partition(5, 9, 1).unwrap();
        let lc = ElmModel::random_init(5, 9, Some(&p), RngSeed(77)).unwrap();
        let full = ElmModel::random_init(5, 9, None, RngSeed(77)).unwrap();
        assert_eq!(lc.input_weights_dense(), full.input_weights_dense());
        assert_eq!(lc.biases(), full.biases());
    }

    #[test]
    fn gaussian_init_is_supported() {
        let m = ElmModel::random_init_with(
            3,
            5,
            None,
            RngSeed(1),
            WeightInit::Gaussian { std_dev: 0.5 },
        )
        .unwrap();
        assert!(m
            .input_weights_dense()
            .as_slice()
            .iter()
            .any(|&v| v.abs() > 0.0));
        assert!(ElmModel::random_init_with(
            3,
            5,
            None,
            RngSeed(1),
            WeightInit::Uniform { scale: 0.0 }
        )
        .is_err());
    }

    #[test]
    fn from_parts_rejects_bad_structure() {
        let m = ElmModel::random_init(3, 4, None, RngSeed(0)).unwrap();
        let res = ElmModel::from_parts(
            3,
            4,
            m.blocks().to_vec(),
            vec![0.0; 3],
            None,
            Activation::Sigmoid,
            None,
            RngSeed(0),
            WeightInit::default(),
        );
        assert!(res.is_err());
    }

    proptest! {
        #[test]
        fn block_mask_survives_fit(k in 1usize..4, per_in in 1usize..4, extra in 1usize..4, seed in any::<u64>()) {
            let n = k * per_in;
            let l = k * (per_in + extra);
            let p = make_partition(n, l, k).unwrap();
            let m = ElmModel::random_init(n, l, Some(&p), RngSeed(seed)).unwrap();
            let x = uniform_matrix(15, n, seed ^ 1, -2.0, 2.0);
            let t = uniform_matrix(15, 2, seed ^ 2, -1.0, 1.0);
            let fitted = m.fit(&regression(x.clone(), t)).unwrap();
            let (in_g, hid_g) = p.membership();
            let w = fitted.input_weights_dense();
            for (j, gj) in in_g.iter().enumerate() {
                for (i, gi) in hid_g.iter().enumerate() {
                    if gj != gi {
                        prop_assert_eq!(w.get(j, i), 0.0);
                    } else {
                        prop_assert!(w.get(j, i) != 0.0);
                    }
                }
            }
            let h = fitted.hidden_matrix(&x).unwrap();
            prop_assert!(h.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        }

        #[test]
        fn one_group_predictions_bit_identical(n in 1usize..6, extra in 1usize..6, seed in any::<u64>()) {
            let l = n + extra;
            let p = make_partition(n, l, 1).unwrap();
            let x = uniform_matrix(12, n, seed.wrapping_add(3), -2.0, 2.0);
            let t = uniform_matrix(12, 1, seed.wrapping_add(4), -1.0, 1.0);
            let d = regression(x.clone(), t);
            let lc = ElmModel::random_init(n, l, Some(&p), RngSeed(seed)).unwrap().fit(&d).unwrap();
            let full = ElmModel::random_init(n, l, None, RngSeed(seed)).unwrap().fit(&d).unwrap();
            let a = lc.predict(&x).unwrap();
            let b = full.predict(&x).unwrap();
            prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
