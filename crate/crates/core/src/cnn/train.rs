//! Mini-batch SGD with momentum, weight decay and a plateau learning-rate schedule.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers;
use super::network::{argmax, init_with, Gradients, InitScheme, ModelState, NetworkSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_WEIGHT_DECAY: f64 = 0.0005;

/// One labelled network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tensor,
    pub label: usize,
}

/// `v <- momentum * v - weight_decay * lr * w - lr * g`, then `w <- w + v`,
/// for weights and biases alike.
pub fn sgd_step(state: &mut ModelState, grads: &Gradients, lr: f64, momentum: f64, weight_decay: f64) -> Result<()> {
    grads.ensure_finite()?;
    if grads.layers.len() != state.params.len() {
        return Err(Error::shape("gradient layer count does not match the model"));
    }
    for (p, g) in state.params.iter_mut().zip(&grads.layers) {
        match (p, g) {
            (Some(p), Some((gw, gb))) => {
                for (param, grad) in [(&mut p.weight, gw), (&mut p.bias, gb)] {
                    if param.value.shape() != grad.shape() {
                        return Err(Error::shape(format!(
                            "gradient {:?} does not match parameter {:?}",
                            grad.shape(),
                            param.value.shape()
                        )));
                    }
                    let v = param.velocity.data_mut();
                    let w = param.value.data_mut();
                    for ((v, w), g) in v.iter_mut().zip(w.iter_mut()).zip(grad.data()) {
                        *v = momentum * *v - weight_decay * lr * *w - lr * g;
                        *w += *v;
                    }
                }
            }
            (None, None) => {}
            _ => return Err(Error::shape("gradient layout does not match the model")),
        }
    }
    state.iteration += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_drop_factor: f64,
    pub lr_floor: f64,
    /// Epochs without a validation-loss improvement of at least `plateau_min_delta`
    /// before the rate is dropped.
    pub plateau_patience: usize,
    pub plateau_min_delta: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub stop_at_zero_val_error: bool,
    pub init: InitScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.01,
            momentum: DEFAULT_MOMENTUM,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            lr_drop_factor: 0.1,
            lr_floor: 1e-5,
            plateau_patience: 3,
            plateau_min_delta: 1e-4,
            max_epochs: 50,
            batch_size: 16,
            seed: 0,
            stop_at_zero_val_error: true,
            init: InitScheme::SmallGaussian,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_floor > 0.0 && self.lr0 > self.lr_floor) {
            return Err(Error::domain("need lr0 > lr_floor > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::domain("momentum must be in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::domain("weight decay must be non-negative"));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor < 1.0) {
            return Err(Error::domain("lr drop factor must be in (0, 1)"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.plateau_patience == 0 {
            return Err(Error::domain("batch size, max epochs and patience must be positive"));
        }
        if self.plateau_min_delta.is_nan() || self.plateau_min_delta < 0.0 {
            return Err(Error::domain("plateau threshold must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrAction {
    Keep,
    Drop,
    Stop,
}

/// Tracks the best validation loss and decides when to cut the learning rate.
#[derive(Debug, Clone)]
pub struct PlateauSchedule {
    lr: f64,
    drop: f64,
    floor: f64,
    patience: usize,
    min_delta: f64,
    best: f64,
    stale: usize,
}

impl PlateauSchedule {
    pub fn new(cfg: &TrainConfig) -> Self {
        PlateauSchedule {
            lr: cfg.lr0,
            drop: cfg.lr_drop_factor,
            floor: cfg.lr_floor,
            patience: cfg.plateau_patience,
            min_delta: cfg.plateau_min_delta,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Feeds one epoch's validation loss. A drop that would land below the floor
    /// stops training instead.
    pub fn observe(&mut self, val_loss: f64) -> LrAction {
        // an infinite threshold makes `best - min_delta` NaN, so nothing ever improves
        if val_loss <= self.best - self.min_delta {
            self.best = val_loss;
            self.stale = 0;
            return LrAction::Keep;
        }
        self.best = self.best.min(val_loss);
        self.stale += 1;
        if self.stale < self.patience {
            return LrAction::Keep;
        }
        self.stale = 0;
        let next = self.lr * self.drop;
        // relative slack so 0.01 * 0.1^3 still counts as 1e-5
        if next < self.floor * (1.0 - 1e-9) {
            LrAction::Stop
        } else {
            self.lr = next;
            LrAction::Drop
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroValidationError,
    LrFloor,
    MaxEpochs,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Parameters from the epoch with the lowest validation error.
    pub best: ModelState,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
    pub stop_reason: StopReason,
    /// Set when every validation example carries the same label.
    pub single_class_validation: bool,
}

/// Loss, accuracy and confusion matrix (`[true][predicted]`) over a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(state: &ModelState, examples: &[Example]) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::domain("cannot evaluate an empty set"));
    }
    let n_classes = state.spec.n_classes;
    let results: Vec<(f64, usize, usize)> = examples
        .par_iter()
        .map(|ex| {
            let logits = state.logits(&ex.input)?;
            let (loss, _) = layers::cross_entropy(&logits, ex.label)?;
            Ok((loss, ex.label, argmax(&logits)))
        })
        .collect::<Result<_>>()?;
    let mut confusion = vec![vec![0; n_classes]; n_classes];
    let mut loss = 0.0;
    for (l, truth, pred) in &results {
        loss += l;
        confusion[*truth][*pred] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let n = examples.len() as f64;
    Ok(Evaluation { loss: loss / n, accuracy: correct as f64 / n, confusion })
}

/// Mean loss and summed-then-averaged gradients for one batch. Per-sample work
/// runs in parallel; the reduction happens in index order.
fn batch_gradients(state: &ModelState, batch: &[&Example]) -> Result<(f64, usize, Gradients)> {
    let parts: Vec<(f64, bool, Gradients)> = batch
        .par_iter()
        .map(|ex| {
            let trace = state.forward_trace(&ex.input)?;
            let (loss, grad) = layers::cross_entropy(trace.logits(), ex.label)?;
            let hit = argmax(trace.logits()) == ex.label;
            let (g, _) = state.backward_from(&trace, &grad)?;
            Ok((loss, hit, g))
        })
        .collect::<Result<_>>()?;
    let mut total = Gradients::zeros_like(state);
    let mut loss = 0.0;
    let mut hits = 0;
    for (l, hit, g) in &parts {
        loss += l;
        hits += usize::from(*hit);
        total.accumulate(g)?;
    }
    let inv = 1.0 / batch.len() as f64;
    for (w, b) in total.layers.iter_mut().flatten() {
        w.scale(inv);
        b.scale(inv);
    }
    Ok((loss, hits, total))
}

fn check_labels(examples: &[Example], n_classes: usize, what: &str) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::domain(format!("{what} set is empty")));
    }
    if let Some(ex) = examples.iter().find(|e| e.label >= n_classes) {
        return Err(Error::domain(format!("{what} label {} out of range", ex.label)));
    }
    Ok(())
}

/// Trains from a fresh `cfg.init` initialisation seeded by `cfg.seed`.
pub fn train(spec: &NetworkSpec, train_set: &[Example], val_set: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    let state = init_with(spec, cfg.seed, cfg.init)?;
    train_from(state, train_set, val_set, cfg, |_| {})
}

/// Trains an existing state. `on_epoch` sees each epoch's metrics as they are produced.
///
/// Train loss and accuracy are running averages over the epoch's batches,
/// measured before each batch's update.
pub fn train_from(
    mut state: ModelState,
    train_set: &[Example],
    val_set: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainReport> {
    cfg.validate()?;
    let n_classes = state.spec.n_classes;
    check_labels(train_set, n_classes, "training")?;
    check_labels(val_set, n_classes, "validation")?;
    let single_class_validation = val_set.iter().all(|e| e.label == val_set[0].label);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464c_4500);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut schedule = PlateauSchedule::new(cfg);
    let mut history = Vec::new();
    let mut best: Option<(f64, f64, usize, ModelState)> = None;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        let lr = schedule.lr();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut hits = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, h, grads) = batch_gradients(&state, &batch)?;
            loss_sum += loss;
            hits += h;
            sgd_step(&mut state, &grads, lr, cfg.momentum, cfg.weight_decay)?;
        }
        for p in state.param_layers() {
            p.weight.value.ensure_finite("weights")?;
            p.bias.value.ensure_finite("biases")?;
        }
        let val = evaluate(&state, val_set)?;
        let n = train_set.len() as f64;
        let metrics = EpochMetrics {
            epoch,
            lr,
            train_loss: loss_sum / n,
            train_acc: hits as f64 / n,
            val_loss: val.loss,
            val_acc: val.accuracy,
        };
        on_epoch(&metrics);
        history.push(metrics);

        let val_err = 1.0 - val.accuracy;
        let better = match &best {
            None => true,
            Some((e, l, _, _)) => val_err < *e || (val_err == *e && val.loss < *l),
        };
        if better {
            best = Some((val_err, val.loss, epoch, state.clone()));
        }
        if cfg.stop_at_zero_val_error && val_err == 0.0 {
            stop_reason = StopReason::ZeroValidationError;
            break;
        }
        if schedule.observe(val.loss) == LrAction::Stop {
            stop_reason = StopReason::LrFloor;
            break;
        }
    }
    let (_, _, best_epoch, best) = best.expect("at least one epoch runs");
    Ok(TrainReport { best, best_epoch, history, stop_reason, single_class_validation })
}

/// First epoch whose validation accuracy reaches `threshold`.
pub fn epochs_to_threshold(history: &[EpochMetrics], threshold: f64) -> Option<usize> {
    history.iter().find(|m| m.val_acc >= threshold).map(|m| m.epoch)
}
