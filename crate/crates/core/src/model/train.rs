//! Mini-batch Adam training with deterministic batch-parallel gradients.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::bench::metrics::macro_f1;
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, Parameters};
use crate::par::Execution;
use crate::sampling::{MultiRateWindow, RateConfig};

/// Samples per gradient chunk. Chunk sums are reduced in chunk order, so
/// the result does not depend on thread count or execution mode.
pub const GRAD_CHUNK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 20,
            batch_size: 32,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            seed: 0,
            parallel: true,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::Config(format!("lr must be >= 0, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1_action: f64,
    pub val_f1_verb: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation action macro-F1.
    pub model: Model,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Predictions and scores on a labeled window set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub predictions: Vec<usize>,
    pub f1_action: f64,
    pub f1_verb: f64,
}

/// Maps an action index to its verb index. Unknown actions map to 0.
pub fn verb_of(action_to_verb: &[usize], action: usize) -> usize {
    action_to_verb.get(action).copied().unwrap_or(0)
}

pub fn evaluate(
    model: &Model,
    windows: &[MultiRateWindow],
    action_to_verb: &[usize],
    exec: Execution,
) -> Result<Evaluation> {
    if windows.is_empty() {
        return Err(Error::EmptyInput("no windows to evaluate".into()));
    }
    let out = exec.map(windows, |w| -> Result<(f64, usize)> {
        let logits = model.forward(w)?;
        let m = crate::nn::Matrix::from_vec(1, logits.len(), logits.clone())?;
        let (loss, _) = crate::nn::softmax_cross_entropy(&m, &[w.label])?;
        Ok((loss, super::network::argmax(&logits)))
    });
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(windows.len());
    for r in out {
        let (l, p) = r?;
        loss += l;
        predictions.push(p);
    }
    let labels: Vec<usize> = windows.iter().map(|w| w.label).collect();
    let n_actions = model.n_actions();
    let f1_action = macro_f1(&predictions, &labels, n_actions)?;
    let verb_pred: Vec<usize> = predictions
        .iter()
        .map(|&p| verb_of(action_to_verb, p))
        .collect();
    let verb_true: Vec<usize> = windows.iter().map(|w| w.verb).collect();
    let n_verbs = verb_pred
        .iter()
        .chain(&verb_true)
        .copied()
        .max()
        .unwrap_or(0)
        + 1;
    let f1_verb = macro_f1(&verb_pred, &verb_true, n_verbs)?;
    Ok(Evaluation {
        loss: loss / windows.len() as f64,
        predictions,
        f1_action,
        f1_verb,
    })
}

/// Mean loss and summed gradient over `batch`, each sample weighted by
/// `1 / batch.len()`.
pub fn batch_gradient(
    model: &Model,
    batch: &[&MultiRateWindow],
    exec: Execution,
) -> Result<(Vec<f64>, Model)> {
    let weight = 1.0 / batch.len() as f64;
    let partials = exec.map_chunks(batch, GRAD_CHUNK, |chunk| -> Result<(Vec<f64>, Model)> {
        let mut g = model.zeros_like();
        let losses = chunk
            .iter()
            .map(|w| model.loss_and_grad(w, weight, &mut g))
            .collect::<Result<Vec<f64>>>()?;
        Ok((losses, g))
    });
    let mut losses = Vec::with_capacity(batch.len());
    let mut total: Option<Model> = None;
    for p in partials {
        let (l, g) = p?;
        losses.extend(l);
        match &mut total {
            Some(t) => t.accumulate(&g),
            None => total = Some(g),
        }
    }
    Ok((losses, total.expect("non-empty batch")))
}

pub fn train(
    config: ModelConfig,
    rates: RateConfig,
    train_set: &[MultiRateWindow],
    val_set: &[MultiRateWindow],
    action_to_verb: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    if let Some(w) = train_set
        .iter()
        .chain(val_set)
        .find(|w| w.label >= config.n_actions)
    {
        return Err(Error::Data(format!(
            "label {} in take {} exceeds n_actions = {}",
            w.label, w.source.take, config.n_actions
        )));
    }
    let exec = Execution::from_flag(cfg.parallel);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::new(config, rates, &mut rng)?;
    let mut adam = Adam::new(cfg.adam(), &model);
    let eval_set = if val_set.is_empty() {
        train_set
    } else {
        val_set
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut per_sample = vec![0.0; train_set.len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Model)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&MultiRateWindow> = idx.iter().map(|&i| &train_set[i]).collect();
            let (losses, grads) = batch_gradient(&model, &batch, exec)?;
            for (&i, l) in idx.iter().zip(losses) {
                per_sample[i] = l;
            }
            if per_sample.iter().any(|l| !l.is_finite()) || !grads.is_finite() {
                return Err(Error::Divergence { epoch, lr: cfg.lr });
            }
            adam.step(&mut model, &grads);
        }
        let train_loss = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
        let eval = evaluate(&model, eval_set, action_to_verb, exec)?;
        if !eval.loss.is_finite() {
            return Err(Error::Divergence { epoch, lr: cfg.lr });
        }
        debug!(
            "epoch {epoch}: train loss {train_loss:.4}, val loss {:.4}, val F1 action {:.4} verb {:.4}",
            eval.loss, eval.f1_action, eval.f1_verb
        );
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss: eval.loss,
            val_f1_action: eval.f1_action,
            val_f1_verb: eval.f1_verb,
        });
        if best
            .as_ref()
            .map_or(true, |(f1, _, _)| eval.f1_action > *f1)
        {
            best = Some((eval.f1_action, epoch, model.clone()));
        }
    }
    let (best_f1, best_epoch, best_model) = match best {
        Some(b) => b,
        None => (f64::NAN, 0, model),
    };
    info!(
        "trained {} ({}, {}): best val action F1 {best_f1:.4} at epoch {best_epoch}",
        config.kind, rates.f_rgb, rates.f_hp
    );
    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        history,
    })
}
