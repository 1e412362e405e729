//! Mini-batch training loop: BCE + L2 loss, seeded shuffling, stratified
//! validation split, per-epoch learning curves.

use serde::{Deserialize, Serialize};

use crate::data::{shuffle, Label};
use crate::error::{Error, Result};
use crate::graph::Mode;
use crate::nn::Reduction;
use crate::optim::{OptimizerKind, OptimizerState};
use crate::rng::derived_rng;
use crate::tensor::Tensor;

use super::forward::{decide, micro_batch_limit, stack};
use super::{forward_batch, ModelName, ModelParams, ModelSpec, Prediction};

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Share of the training partition held out, stratified, for the
    /// validation learning curve. Zero disables validation.
    pub validation_fraction: f64,
}

impl TrainConfig {
    /// The published per-family defaults: epochs / batch size / learning
    /// rate of 32/10/0.01 for the CNNs, 30/16/0.01 for the LSTMs, and
    /// 50/128/0.01 for the CNN-LSTMs.
    pub fn for_model(name: ModelName) -> Self {
        let (epochs, batch_size) = match name {
            ModelName::Cnn1 | ModelName::Cnn2 | ModelName::Cnn3 => (32, 10),
            ModelName::Lstm1 | ModelName::Lstm2 => (30, 16),
            ModelName::CnnLstm1 | ModelName::CnnLstm2 => (50, 128),
        };
        TrainConfig {
            epochs,
            batch_size,
            learning_rate: 0.01,
            optimizer: OptimizerKind::default(),
            seed: 0,
            validation_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive".to_string()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// One learning-curve point. Train statistics are running values from the
/// optimisation pass (dropout active, parameters mid-flight); validation
/// statistics are an eval-mode pass after the epoch, with the L2 penalty
/// included in the loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

/// A fitted model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub config: TrainConfig,
    pub input_samples: usize,
    pub input_channels: usize,
    pub learning_curve: Vec<EpochStats>,
}

impl TrainedModel {
    /// Eval-mode batched classification; see [`super::predict_scores`].
    pub fn predict(&self, frames: &[&Tensor], threshold: f64) -> Result<Vec<Prediction>> {
        super::predict_scores(&self.spec, &self.params, frames, threshold)
    }
}

/// Row-major one-hot / scalar target for a label.
fn target_row(label: Label, units: usize, out: &mut Vec<f64>) {
    if units == 2 {
        // Unit 0 is the SZ unit.
        out.extend(match label {
            Label::Sz => [1.0, 0.0],
            Label::Hc => [0.0, 1.0],
        });
    } else {
        out.push(label.target());
    }
}

fn count_correct(units: usize, outputs: &Tensor, labels: &[Label]) -> usize {
    let d = outputs.data();
    labels
        .iter()
        .enumerate()
        .filter(|(i, &label)| decide(&d[i * units..(i + 1) * units], 0.5).label == label)
        .count()
}

/// Fits `spec` to labelled frames (all `[t, c]`, same shape).
///
/// Loss is mean BCE over the batch (and over head units) plus
/// `l2_coeff · Σ‖w‖²` applied once per optimiser step; large batches are
/// processed in memory-bounded micro-batches with gradients accumulated
/// before the step, so the result does not depend on the memory budget
/// beyond float summation order. Everything random — initialisation, the
/// validation split, per-epoch shuffles, dropout — derives from
/// `config.seed`, making training bit-reproducible.
pub fn train(
    spec: &ModelSpec,
    data: &[(&Tensor, Label)],
    config: &TrainConfig,
) -> Result<TrainedModel> {
    spec.validate()?;
    config.validate()?;
    if data.is_empty() {
        return Err(Error::data("empty training set".to_string()));
    }
    let (t, c) = data[0].0.dims2()?;
    for (frame, _) in data {
        if frame.dims2()? != (t, c) {
            return Err(Error::shape(format!(
                "training frames disagree on shape: {:?} vs [{t}, {c}]",
                frame.shape()
            )));
        }
    }
    let class_counts = [
        data.iter().filter(|(_, l)| *l == Label::Sz).count(),
        data.iter().filter(|(_, l)| *l == Label::Hc).count(),
    ];
    if class_counts.contains(&0) {
        return Err(Error::data(
            "training set contains a single class".to_string(),
        ));
    }

    let mut params = ModelParams::init(spec, t, c, config.seed)?;
    let units = spec.head_units();
    let micro_limit = micro_batch_limit(spec, t, c)?;

    // Stratified validation split.
    let mut train_idx: Vec<usize> = Vec::new();
    let mut val_idx: Vec<usize> = Vec::new();
    for label in [Label::Sz, Label::Hc] {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data[i].1 == label)
            .collect();
        shuffle(
            &mut members,
            &mut derived_rng(config.seed, "val-split", label.index() as u64),
        );
        let n_val = (config.validation_fraction * members.len() as f64).floor() as usize;
        val_idx.extend_from_slice(&members[..n_val]);
        train_idx.extend_from_slice(&members[n_val..]);
    }
    if train_idx.is_empty() {
        return Err(Error::config(
            "validation fraction leaves no training data".to_string(),
        ));
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();

    let n_params = params.flat().len();
    let mut optimizer = OptimizerState::new(config.optimizer, config.learning_rate);
    let mut learning_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order = train_idx.clone();
        shuffle(&mut order, &mut derived_rng(config.seed, "shuffle", epoch as u64));
        let mut dropout_rng = derived_rng(config.seed, "dropout", epoch as u64);

        let mut epoch_bce_sum = 0.0;
        let mut epoch_l2_sum = 0.0;
        let mut batches = 0usize;
        let mut correct = 0usize;

        for batch in order.chunks(config.batch_size) {
            let scale = 1.0 / (batch.len() * units) as f64;
            let mut grad_acc: Vec<Option<Tensor>> = (0..n_params).map(|_| None).collect();

            for micro in batch.chunks(micro_limit) {
                let frames: Vec<&Tensor> = micro.iter().map(|&i| data[i].0).collect();
                let labels: Vec<Label> = micro.iter().map(|&i| data[i].1).collect();
                let mut targets = Vec::with_capacity(micro.len() * units);
                for &l in &labels {
                    target_row(l, units, &mut targets);
                }
                let batch_tensor = stack(&frames, t, c)?;
                let bg = forward_batch(spec, &params, batch_tensor, Mode::Train, &mut dropout_rng)?;
                let mut graph = bg.graph;
                correct += count_correct(units, graph.value(bg.output), &labels);
                let loss_id = graph.bce_loss(
                    bg.output,
                    Tensor::from_shape_vec(&[micro.len(), units], targets)?,
                    Reduction::Sum,
                    0.0,
                    &[],
                )?;
                let loss = graph.value(loss_id).as_scalar()?;
                if !loss.is_finite() {
                    return Err(Error::numerics(format!(
                        "{} diverged: non-finite loss at epoch {epoch}, batch {batches} \
                         (learning rate {})",
                        spec.name, config.learning_rate
                    )));
                }
                epoch_bce_sum += loss;
                let mut grads = graph.backward_scaled(loss_id, scale)?;
                for (k, pid) in bg.param_ids.iter().enumerate() {
                    if let Some(g) = grads.take(*pid) {
                        match &mut grad_acc[k] {
                            Some(acc) => acc.add_scaled(1.0, &g)?,
                            slot => *slot = Some(g),
                        }
                    }
                }
            }

            epoch_l2_sum += spec.l2_coeff * params.squared_weight_norm();
            let flats = params.flat_mut();
            let mut grads_final = Vec::with_capacity(n_params);
            for (k, (p, is_weight)) in flats.iter().enumerate() {
                let mut g = grad_acc[k]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(p.shape()));
                if *is_weight && spec.l2_coeff > 0.0 {
                    g.add_scaled(2.0 * spec.l2_coeff, p)?;
                }
                grads_final.push(g);
            }
            let mut refs: Vec<&mut Tensor> = flats.into_iter().map(|(p, _)| p).collect();
            optimizer.step(&mut refs, &grads_final)?;
            batches += 1;
        }

        let train_loss = epoch_bce_sum / (order.len() * units) as f64
            + epoch_l2_sum / batches.max(1) as f64;
        let train_accuracy = correct as f64 / order.len() as f64;
        let (val_loss, val_accuracy) = if val_idx.is_empty() {
            (None, None)
        } else {
            let (bce, acc) = evaluate(spec, &params, data, &val_idx, t, c, micro_limit)?;
            (
                Some(bce + spec.l2_coeff * params.squared_weight_norm()),
                Some(acc),
            )
        };
        learning_curve.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });
    }

    Ok(TrainedModel {
        spec: spec.clone(),
        params,
        config: config.clone(),
        input_samples: t,
        input_channels: c,
        learning_curve,
    })
}

/// Eval-mode mean per-element BCE and accuracy over `idx`.
fn evaluate(
    spec: &ModelSpec,
    params: &ModelParams,
    data: &[(&Tensor, Label)],
    idx: &[usize],
    t: usize,
    c: usize,
    micro_limit: usize,
) -> Result<(f64, f64)> {
    let units = spec.head_units();
    let mut rng = derived_rng(0, "eval", 0); // never drawn from
    let mut bce_sum = 0.0;
    let mut correct = 0usize;
    for micro in idx.chunks(micro_limit) {
        let frames: Vec<&Tensor> = micro.iter().map(|&i| data[i].0).collect();
        let labels: Vec<Label> = micro.iter().map(|&i| data[i].1).collect();
        let mut targets = Vec::with_capacity(micro.len() * units);
        for &l in &labels {
            target_row(l, units, &mut targets);
        }
        let batch = stack(&frames, t, c)?;
        let bg = forward_batch(spec, params, batch, Mode::Eval, &mut rng)?;
        let mut graph = bg.graph;
        correct += count_correct(units, graph.value(bg.output), &labels);
        let loss_id = graph.bce_loss(
            bg.output,
            Tensor::from_shape_vec(&[micro.len(), units], targets)?,
            Reduction::Sum,
            0.0,
            &[],
        )?;
        bce_sum += graph.value(loss_id).as_scalar()?;
    }
    Ok((
        bce_sum / (idx.len() * units) as f64,
        correct as f64 / idx.len() as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, ModelName};
    use crate::nn::Activation;

    /// `n` frames per class of `[t, c]` constants: SZ frames all `+1`,
    /// HC frames all `-1` — linearly separable by any averaging filter.
    fn toy_set(n: usize, t: usize, c: usize) -> Vec<(Tensor, Label)> {
        let mut out = Vec::new();
        for i in 0..2 * n {
            let label = if i % 2 == 0 { Label::Sz } else { Label::Hc };
            let v = if label == Label::Sz { 1.0 } else { -1.0 };
            out.push((Tensor::filled(&[t, c], v), label));
        }
        out
    }

    fn as_refs(owned: &[(Tensor, Label)]) -> Vec<(&Tensor, Label)> {
        owned.iter().map(|(t, l)| (t, *l)).collect()
    }

    fn quick_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 10,
            learning_rate: 0.01,
            optimizer: OptimizerKind::Adam,
            seed: 42,
            validation_fraction: 0.1,
        }
    }

    #[test]
    fn zero_epochs_returns_initialization_and_empty_curve() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let owned = toy_set(10, 8, 2);
        let model = train(&spec, &as_refs(&owned), &quick_config(0)).unwrap();
        assert!(model.learning_curve.is_empty());
        let fresh = ModelParams::init(&spec, 8, 2, 42).unwrap();
        assert_eq!(model.params, fresh);
    }

    #[test]
    fn separable_toy_set_reaches_full_training_accuracy() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let owned = toy_set(20, 8, 2);
        let model = train(&spec, &as_refs(&owned), &quick_config(5)).unwrap();
        let last = model.learning_curve.last().unwrap();
        assert_eq!(last.train_accuracy, 1.0, "curve: {:?}", model.learning_curve);
        assert_eq!(last.val_accuracy, Some(1.0));
        for stats in &model.learning_curve {
            assert!(stats.train_loss.is_finite());
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let spec = build(ModelName::Lstm1, Activation::Relu);
        let owned = toy_set(8, 10, 2);
        let a = train(&spec, &as_refs(&owned), &quick_config(2)).unwrap();
        let b = train(&spec, &as_refs(&owned), &quick_config(2)).unwrap();
        assert_eq!(a.learning_curve, b.learning_curve);
        assert_eq!(a.params, b.params);
        let mut other = quick_config(2);
        other.seed = 43;
        let c = train(&spec, &as_refs(&owned), &other).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn single_class_and_shape_mismatches_are_rejected() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let single: Vec<(Tensor, Label)> = (0..6)
            .map(|_| (Tensor::filled(&[8, 2], 1.0), Label::Sz))
            .collect();
        assert!(train(&spec, &as_refs(&single), &quick_config(1)).is_err());

        let mut mixed = toy_set(4, 8, 2);
        mixed[0].0 = Tensor::filled(&[9, 2], 1.0);
        assert!(train(&spec, &as_refs(&mixed), &quick_config(1)).is_err());

        assert!(train(&spec, &[], &quick_config(1)).is_err());
    }

    #[test]
    fn absurd_learning_rate_aborts_with_divergence_error() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let owned = toy_set(10, 8, 2);
        let mut config = quick_config(3);
        config.learning_rate = 1e300;
        config.optimizer = OptimizerKind::Sgd;
        let err = train(&spec, &as_refs(&owned), &config).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("diverged") || msg.contains("finite"),
            "unexpected error: {msg}"
        );
    }

    #[test]
    fn l2_penalty_shrinks_weight_norms() {
        let owned = toy_set(10, 8, 2);
        let mut with = build(ModelName::Cnn1, Activation::Relu);
        with.l2_coeff = 0.05;
        let mut without = with.clone();
        without.l2_coeff = 0.0;
        let mut config = quick_config(3);
        config.optimizer = OptimizerKind::Sgd;
        config.validation_fraction = 0.0;
        let m_with = train(&with, &as_refs(&owned), &config).unwrap();
        let m_without = train(&without, &as_refs(&owned), &config).unwrap();
        assert!(
            m_with.params.squared_weight_norm() < m_without.params.squared_weight_norm(),
            "{} vs {}",
            m_with.params.squared_weight_norm(),
            m_without.params.squared_weight_norm()
        );
    }

    #[test]
    fn validation_can_be_disabled() {
        let spec = build(ModelName::Cnn1, Activation::Relu);
        let owned = toy_set(6, 8, 2);
        let mut config = quick_config(1);
        config.validation_fraction = 0.0;
        let model = train(&spec, &as_refs(&owned), &config).unwrap();
        assert_eq!(model.learning_curve[0].val_loss, None);
        assert_eq!(model.learning_curve[0].val_accuracy, None);
    }

    #[test]
    fn family_defaults_match_published_table() {
        let cases = [
            (ModelName::Cnn1, 32, 10),
            (ModelName::Cnn2, 32, 10),
            (ModelName::Cnn3, 32, 10),
            (ModelName::Lstm1, 30, 16),
            (ModelName::Lstm2, 30, 16),
            (ModelName::CnnLstm1, 50, 128),
            (ModelName::CnnLstm2, 50, 128),
        ];
        for (name, epochs, batch) in cases {
            let c = TrainConfig::for_model(name);
            assert_eq!((c.epochs, c.batch_size), (epochs, batch), "{name}");
            assert_eq!(c.learning_rate, 0.01);
        }
    }
}
