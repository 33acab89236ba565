//! The single-hidden-layer perceptron that scores attrition risk.
//!
//! Layout: standardized features -> sigmoid hidden layer -> softmax over two
//! outputs. Output 0 is the attrition factor, output 1 the stay factor, and
//! the non-resignation probability is `stay / (attrition + stay)`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{column_ranges, EncodedDataset, EncodedSchema, Label, StandardizationStats};
use crate::document;
use crate::error::{Error, Result};
use crate::rng::{seeded, Stream};
use crate::state::StateFunction;

pub const MODEL_FORMAT: &str = "attrition-mlp";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const LOG_FLOOR: f64 = 1e-12;

/// Weights are row-major: `w1[i * hidden + j]` connects input `i` to hidden
/// unit `j`, `w2[j * outputs + k]` connects hidden `j` to output `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub hidden: Vec<f64>,
    /// Softmax outputs: nonnegative, summing to one.
    pub outputs: Vec<f64>,
}

impl Forward {
    pub fn attrition_factor(&self) -> f64 {
        self.outputs[Label::Attrition.index()]
    }

    pub fn stay_factor(&self) -> f64 {
        self.outputs[Label::Stay.index()]
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `P_not_out`: the stay factor's share of the two output factors.
pub fn stay_probability(attrition: f64, stay: f64) -> f64 {
    stay / (attrition + stay)
}

/// `P_out`: the attrition factor's share.
pub fn attrition_probability(attrition: f64, stay: f64) -> f64 {
    attrition / (attrition + stay)
}

impl MlpParams {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        MlpParams {
            inputs,
            hidden,
            outputs,
            w1: vec![0.0; inputs * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * outputs],
            b2: vec![0.0; outputs],
        }
    }

    /// Weights uniform in `±scale / sqrt(fan_in)`, biases zero.
    pub fn random<R: Rng>(inputs: usize, hidden: usize, outputs: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(inputs, hidden, outputs);
        let s1 = scale / (inputs as f64).sqrt();
        let s2 = scale / (hidden as f64).sqrt();
        for w in &mut p.w1 {
            *w = rng.gen_range(-s1..=s1);
        }
        for w in &mut p.w2 {
            *w = rng.gen_range(-s2..=s2);
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            (self.w1.len(), self.inputs * self.hidden),
            (self.b1.len(), self.hidden),
            (self.w2.len(), self.hidden * self.outputs),
            (self.b2.len(), self.outputs),
        ];
        for (actual, expected) in dims {
            if actual != expected {
                return Err(Error::Dimension { expected, actual });
            }
        }
        if self.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All parameters in the order w1, b1, w2, b2.
    pub fn flat(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.parameter_count());
        let mut it = values.iter().copied();
        for slot in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            for v in slot.iter_mut() {
                *v = it.next().unwrap();
            }
        }
    }

    pub fn forward(&self, z: &[f64]) -> Result<Forward> {
        if z.len() != self.inputs {
            return Err(Error::Dimension {
                expected: self.inputs,
                actual: z.len(),
            });
        }
        Ok(self.forward_unchecked(z))
    }

    fn forward_unchecked(&self, z: &[f64]) -> Forward {
        let h = self.hidden;
        let mut pre = self.b1.clone();
        for (i, &zi) in z.iter().enumerate() {
            let row = &self.w1[i * h..(i + 1) * h];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += zi * w;
            }
        }
        let hidden: Vec<f64> = pre.into_iter().map(sigmoid).collect();
        let o = self.outputs;
        let mut logits = self.b2.clone();
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &self.w2[j * o..(j + 1) * o];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += hj * w;
            }
        }
        Forward {
            hidden,
            outputs: softmax(&logits),
        }
    }
}

/// Gradients laid out exactly like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flat_map(|v| v.iter().copied())
            .collect()
    }
}

/// Mean cross-entropy of `targets` (class indices) over the batch.
pub fn batch_loss(params: &MlpParams, inputs: &[&[f64]], targets: &[usize]) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(targets)
        .map(|(z, &t)| -params.forward_unchecked(z).outputs[t].max(LOG_FLOOR).ln())
        .sum();
    total / inputs.len() as f64
}

/// Mean cross-entropy and its gradient by backpropagation.
pub fn loss_and_gradients(params: &MlpParams, inputs: &[&[f64]], targets: &[usize]) -> (f64, Gradients) {
    let (n_in, n_hid, n_out) = (params.inputs, params.hidden, params.outputs);
    let mut g = Gradients {
        w1: vec![0.0; n_in * n_hid],
        b1: vec![0.0; n_hid],
        w2: vec![0.0; n_hid * n_out],
        b2: vec![0.0; n_out],
    };
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;
    let mut d_out = vec![0.0; n_out];
    let mut d_hid = vec![0.0; n_hid];
    for (z, &t) in inputs.iter().zip(targets) {
        let fwd = params.forward_unchecked(z);
        loss -= fwd.outputs[t].max(LOG_FLOOR).ln();
        // softmax + cross-entropy: d loss / d logit = p - onehot
        for (k, d) in d_out.iter_mut().enumerate() {
            *d = (fwd.outputs[k] - if k == t { 1.0 } else { 0.0 }) * scale;
        }
        for (j, &hj) in fwd.hidden.iter().enumerate() {
            let w_row = &params.w2[j * n_out..(j + 1) * n_out];
            let g_row = &mut g.w2[j * n_out..(j + 1) * n_out];
            let mut back = 0.0;
            for k in 0..n_out {
                g_row[k] += hj * d_out[k];
                back += w_row[k] * d_out[k];
            }
            d_hid[j] = back * hj * (1.0 - hj);
        }
        for (b, d) in g.b2.iter_mut().zip(&d_out) {
            *b += d;
        }
        for (b, d) in g.b1.iter_mut().zip(&d_hid) {
            *b += d;
        }
        for (i, &zi) in z.iter().enumerate() {
            let g_row = &mut g.w1[i * n_hid..(i + 1) * n_hid];
            for (gw, d) in g_row.iter_mut().zip(&d_hid) {
                *gw += zi * d;
            }
        }
    }
    (loss * scale, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Multiplier on the `1/sqrt(fan_in)` initialization range.
    pub init_scale: f64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 32,
            seed: 42,
            init_scale: 1.0,
            hidden: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Config("init scale must be positive".into()));
        }
        Ok(())
    }
}

/// Where the held-out split came from, so evaluation can rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holdout {
    pub train_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainConfig,
    pub samples: usize,
    pub final_loss: f64,
    pub train_accuracy: f64,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
    pub holdout: Option<Holdout>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub params: MlpParams,
    pub stats: StandardizationStats,
    pub schema: EncodedSchema,
    pub fingerprint: String,
    /// Per-feature (min, max) over the training rows; default clamp bounds
    /// for meta-actions.
    pub feature_ranges: Vec<(f64, f64)>,
    pub metadata: TrainingMetadata,
}

impl MlpModel {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let width = self.params.inputs;
        for actual in [
            self.stats.mean.len(),
            self.stats.std.len(),
            self.schema.feature_count(),
            self.feature_ranges.len(),
        ] {
            if actual != width {
                return Err(Error::Dimension {
                    expected: width,
                    actual,
                });
            }
        }
        if self.params.outputs != 2 {
            return Err(Error::Dimension {
                expected: 2,
                actual: self.params.outputs,
            });
        }
        if self.fingerprint != self.schema.fingerprint() {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                actual: self.schema.fingerprint(),
            });
        }
        Ok(())
    }

    fn check_raw(&self, raw: &[f64]) -> Result<()> {
        if raw.len() != self.params.inputs {
            return Err(Error::Dimension {
                expected: self.params.inputs,
                actual: raw.len(),
            });
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature `{}`",
                self.schema.feature_names()[i]
            )));
        }
        Ok(())
    }

    pub fn forward_raw(&self, raw: &[f64]) -> Result<Forward> {
        self.check_raw(raw)?;
        Ok(self.params.forward_unchecked(&self.stats.apply(raw)))
    }

    /// Standardize, run the network, return the stay factor's share.
    pub fn calculate_s(&self, raw: &[f64]) -> Result<f64> {
        let fwd = self.forward_raw(raw)?;
        Ok(stay_probability(fwd.attrition_factor(), fwd.stay_factor()))
    }

    /// Stay exactly when `calculate_s >= 0.5`.
    pub fn predict(&self, raw: &[f64]) -> Result<Label> {
        Ok(if self.calculate_s(raw)? >= 0.5 {
            Label::Stay
        } else {
            Label::Attrition
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        document::write(path, MODEL_FORMAT, MODEL_FORMAT_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: MlpModel = document::read(path, MODEL_FORMAT, MODEL_FORMAT_VERSION)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_document(&self) -> Result<String> {
        document::encode(MODEL_FORMAT, MODEL_FORMAT_VERSION, self)
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let model: MlpModel = document::decode(text, MODEL_FORMAT, MODEL_FORMAT_VERSION)?;
        model.validate()?;
        Ok(model)
    }
}

impl StateFunction for MlpModel {
    fn feature_count(&self) -> usize {
        self.params.inputs
    }

    fn calculate_s(&self, raw: &[f64]) -> Result<f64> {
        MlpModel::calculate_s(self, raw)
    }
}

fn accuracy_on(params: &MlpParams, z: &[Vec<f64>], y: &[Label]) -> f64 {
    let correct = z
        .iter()
        .zip(y)
        .filter(|(zi, label)| {
            let f = params.forward_unchecked(zi);
            let stay = stay_probability(f.attrition_factor(), f.stay_factor()) >= 0.5;
            stay == (**label == Label::Stay)
        })
        .count();
    correct as f64 / z.len() as f64
}

/// Minibatch gradient descent on mean cross-entropy. Standardization stats
/// are fitted on `train_set` and stored in the returned model.
pub fn train(train_set: &EncodedDataset, config: &TrainConfig) -> Result<MlpModel> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    let stats = StandardizationStats::fit(&train_set.x)?;
    let z: Vec<Vec<f64>> = train_set.x.iter().map(|r| stats.apply(r)).collect();
    let targets: Vec<usize> = train_set.y.iter().map(|l| l.index()).collect();
    let n = z.len();

    let mut params = MlpParams::random(
        stats.width(),
        config.hidden,
        2,
        config.init_scale,
        &mut seeded(config.seed, Stream::Init),
    );
    let mut shuffle_rng = seeded(config.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..n).collect();
    let all_inputs: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.batch_size < n {
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle_rng);
        }
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| z[i].as_slice()).collect();
            let tgt: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (_, g) = loss_and_gradients(&params, &inputs, &tgt);
            let lr = config.learning_rate;
            for (p, d) in params.w1.iter_mut().zip(&g.w1) {
                *p -= lr * d;
            }
            for (p, d) in params.b1.iter_mut().zip(&g.b1) {
                *p -= lr * d;
            }
            for (p, d) in params.w2.iter_mut().zip(&g.w2) {
                *p -= lr * d;
            }
            for (p, d) in params.b2.iter_mut().zip(&g.b2) {
                *p -= lr * d;
            }
        }
        let loss = batch_loss(&params, &all_inputs, &targets);
        if !loss.is_finite() || params.flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        history.push(loss);
    }

    let train_accuracy = accuracy_on(&params, &z, &train_set.y);
    Ok(MlpModel {
        fingerprint: train_set.schema.fingerprint(),
        schema: train_set.schema.clone(),
        feature_ranges: column_ranges(&train_set.x),
        stats,
        params,
        metadata: TrainingMetadata {
            config: config.clone(),
            samples: n,
            final_loss: *history.last().expect("epochs >= 1"),
            train_accuracy,
            loss_history: history,
            holdout: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub total: usize,
    /// `confusion[actual][predicted]`, indexed by [`Label::index`].
    pub confusion: [[usize; 2]; 2],
    pub majority_rate: f64,
}

pub fn evaluate(model: &MlpModel, data: &EncodedDataset) -> Result<Evaluation> {
    let fp = data.schema.fingerprint();
    if fp != model.fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: model.fingerprint.clone(),
            actual: fp,
        });
    }
    if data.is_empty() {
        return Err(Error::Empty("evaluation set is empty".into()));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (x, actual) in data.x.iter().zip(&data.y) {
        let predicted = model.predict(x)?;
        confusion[actual.index()][predicted.index()] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(Evaluation {
        accuracy: correct as f64 / data.len() as f64,
        total: data.len(),
        confusion,
        majority_rate: data.majority_rate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CategoryMap, SchemaConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn toy_schema(width: usize) -> EncodedSchema {
        EncodedSchema {
            config: SchemaConfig {
                label_column: "y".into(),
                label_positive: "Yes".into(),
                label_negative: "No".into(),
                id_column: None,
                feature_columns: (0..width).map(|i| format!("f{i}")).collect(),
                categorical_columns: vec![],
                drop_columns: vec![],
            },
            categories: vec![None::<CategoryMap>; width],
        }
    }

    /// Two Gaussian-ish blobs split by the line x0 + x1 = 0.
    fn separable(n: usize, seed: u64) -> EncodedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let stay = i % 2 == 0;
            let c = if stay { 2.0 } else { -2.0 };
            x.push(vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]);
            y.push(if stay { Label::Stay } else { Label::Attrition });
        }
        EncodedDataset {
            ids: vec![None; n],
            x,
            y,
            schema: toy_schema(2),
        }
    }

    #[test]
    fn zero_network_is_indifferent() {
        let p = MlpParams::zeros(4, 3, 2);
        let f = p.forward(&[0.3, -1.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.outputs, vec![0.5, 0.5]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = MlpParams::zeros(4, 3, 2);
        assert!(matches!(p.forward(&[1.0]), Err(Error::Dimension { expected: 4, actual: 1 })));
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MlpParams::random(27, 20, 2, 1.0, &mut rng);
        let z: Vec<f64> = (0..27).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = p.forward(&z).unwrap();
        let b = p.forward(&z).unwrap();
        assert_eq!(a.outputs[0].to_bits(), b.outputs[0].to_bits());
        assert_eq!(a.outputs[1].to_bits(), b.outputs[1].to_bits());
        assert!((a.outputs[0] + a.outputs[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn stay_probability_cases() {
        assert_eq!(stay_probability(0.3, 0.3), 0.5);
        assert_eq!(stay_probability(0.0, 1.0), 1.0);
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = separable(200, 3);
        // hand separator x0 + x1 > 0 classifies the construction perfectly
        assert!(data
            .x
            .iter()
            .zip(&data.y)
            .all(|(x, l)| (x[0] + x[1] > 0.0) == (*l == Label::Stay)));
        let cfg = TrainConfig {
            epochs: 200,
            hidden: 4,
            ..TrainConfig::default()
        };
        let model = train(&data, &cfg).unwrap();
        assert_eq!(model.metadata.train_accuracy, 1.0);
        assert_eq!(evaluate(&model, &data).unwrap().accuracy, 1.0);
    }

    #[test]
    fn zero_learning_rate_keeps_initial_params() {
        let data = separable(40, 5);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            hidden: 3,
            ..TrainConfig::default()
        };
        let model = train(&data, &cfg).unwrap();
        let init = MlpParams::random(2, 3, 2, 1.0, &mut seeded(cfg.seed, Stream::Init));
        assert_eq!(model.params, init);
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let data = separable(60, 9);
        let cfg = TrainConfig {
            batch_size: 1000,
            epochs: 100,
            learning_rate: 0.1,
            hidden: 5,
            ..TrainConfig::default()
        };
        let model = train(&data, &cfg).unwrap();
        for w in model.metadata.loss_history.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable(50, 2);
        let cfg = TrainConfig {
            epochs: 5,
            hidden: 3,
            ..TrainConfig::default()
        };
        assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let data = separable(20, 2);
        let cfg = TrainConfig {
            learning_rate: f64::MAX,
            batch_size: 1,
            epochs: 50,
            hidden: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&data, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn bad_configs_rejected() {
        for cfg in [
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: -1.0, ..TrainConfig::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        }
    }

    fn constant_model(stay_bias: f64, n: usize) -> MlpModel {
        let mut params = MlpParams::zeros(n, 2, 2);
        params.b2 = vec![0.0, stay_bias];
        let schema = toy_schema(n);
        MlpModel {
            params,
            stats: StandardizationStats {
                mean: vec![0.0; n],
                std: vec![1.0; n],
            },
            fingerprint: schema.fingerprint(),
            schema,
            feature_ranges: vec![(0.0, 1.0); n],
            metadata: TrainingMetadata {
                config: TrainConfig::default(),
                samples: 0,
                final_loss: 0.0,
                train_accuracy: 0.0,
                loss_history: vec![],
                holdout: None,
            },
        }
    }

    #[test]
    fn majority_predictor_accuracy() {
        let model = constant_model(3.0, 1);
        let mut y = vec![Label::Stay; 84];
        y.extend(vec![Label::Attrition; 16]);
        let data = EncodedDataset {
            x: vec![vec![0.0]; 100],
            ids: vec![None; 100],
            y,
            schema: toy_schema(1),
        };
        let ev = evaluate(&model, &data).unwrap();
        assert_eq!(ev.accuracy, 0.84);
        assert_eq!(ev.confusion, [[0, 16], [0, 84]]);
        assert_eq!(ev.confusion.iter().flatten().sum::<usize>(), ev.total);
    }

    #[test]
    fn empty_evaluation_is_an_error() {
        let model = constant_model(0.0, 1);
        let data = EncodedDataset {
            x: vec![],
            ids: vec![],
            y: vec![],
            schema: toy_schema(1),
        };
        assert!(matches!(evaluate(&model, &data), Err(Error::Empty(_))));
    }

    #[test]
    fn evaluation_checks_fingerprint() {
        let model = constant_model(0.0, 1);
        let mut schema = toy_schema(1);
        schema.config.feature_columns = vec!["other".into()];
        let data = EncodedDataset {
            x: vec![vec![0.0]],
            ids: vec![None],
            y: vec![Label::Stay],
            schema,
        };
        assert!(matches!(evaluate(&model, &data), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn calculate_s_validates_input() {
        let model = constant_model(0.0, 2);
        assert_eq!(model.calculate_s(&[1.0, 2.0]).unwrap(), 0.5);
        assert!(matches!(model.calculate_s(&[1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(model.calculate_s(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn model_document_round_trip() {
        let data = separable(30, 4);
        let cfg = TrainConfig {
            epochs: 3,
            hidden: 3,
            ..TrainConfig::default()
        };
        let model = train(&data, &cfg).unwrap();
        let back = MlpModel::from_document(&model.to_document().unwrap()).unwrap();
        assert_eq!(back, model);
    }

    proptest! {
        #[test]
        fn probabilities_are_complementary(seed: u64, z in prop::collection::vec(-10.0f64..10.0, 5)) {
            let p = MlpParams::random(5, 4, 2, 3.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let f = p.forward(&z).unwrap();
            let (a, s) = (f.attrition_factor(), f.stay_factor());
            prop_assert!(a >= 0.0 && s >= 0.0 && a + s > 0.0);
            prop_assert!((attrition_probability(a, s) + stay_probability(a, s) - 1.0).abs() <= 1e-12);
        }
    }
}
