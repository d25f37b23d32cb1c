//! Mini-batch training: MSE loss, Adam updates, early stopping on the
//! validation loss with best-snapshot restoration, and seeded repetition for
//! best-of-n protocols.
//!
//! Determinism contract: a fixed `(spec.seed, cfg.seed)` pair reproduces the
//! loss trace bit for bit on one machine. Shuffling permutes training-batch
//! composition only; validation and test passes always run in chronological
//! order.

use crate::dataio::WindowedDataset;
use crate::evaluator::r2_score;
use crate::models::{Model, ModelSpec};
use crate::nn_core::{AdamConfig, Mat};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Shuffle generator gets its own stream so that reseeding the model does
/// not correlate with batch composition.
const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Shuffle training batches each epoch (validation order is fixed).
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 256,
            max_epochs: 500,
            patience: 20,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Config("train.batch_size must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("train.patience must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("train.lr must be positive".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("train.max_epochs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// One row of the loss trace. Both losses are reported in original output
/// units (model-scale losses are rescaled by the normalization variance), so
/// traces are comparable across normalization settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub trace: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

pub struct TrainOutcome {
    pub model: Model,
    pub report: TrainReport,
}

/// Mean squared error of the model on the given target indices plus its
/// gradient, accumulated (averaged over the batch) into the store's gradient
/// buffer. Callers zero the buffer when they want a fresh gradient.
pub fn mse_loss(model: &mut Model, ds: &WindowedDataset, targets: &[usize]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mut x = Mat::zeros(targets.len(), ds.s());
    ds.fill_batch(targets, &mut x);
    let y: Vec<f64> = targets.iter().map(|&k| ds.y_model(k)).collect();
    let loss = model.loss_grad_batch(&x, &y);
    if !loss.is_finite() {
        return Err(Error::Numerics("non-finite batch loss".into()));
    }
    Ok(loss)
}

/// De-normalized predictions for a chronological range of target indices.
pub fn predict_range(model: &mut Model, ds: &WindowedDataset, range: Range<usize>) -> Vec<f64> {
    let idxs: Vec<usize> = range.collect();
    let mut preds = Vec::with_capacity(idxs.len());
    let mut x = Mat::zeros(0, ds.s());
    let mut chunk_out = Vec::new();
    for chunk in idxs.chunks(1024) {
        x.resize(chunk.len(), ds.s());
        ds.fill_batch(chunk, &mut x);
        model.predict_batch(&x, &mut chunk_out);
        preds.extend(chunk_out.iter().map(|&p| ds.denormalize(p)));
    }
    preds
}

/// Model-scale mean squared error over a target range, without gradients.
pub fn mse_model_scale(model: &mut Model, ds: &WindowedDataset, range: Range<usize>) -> f64 {
    let idxs: Vec<usize> = range.collect();
    let mut x = Mat::zeros(0, ds.s());
    let mut out = Vec::new();
    let mut acc = 0.0;
    for chunk in idxs.chunks(1024) {
        x.resize(chunk.len(), ds.s());
        ds.fill_batch(chunk, &mut x);
        model.predict_batch(&x, &mut out);
        for (p, &k) in out.iter().zip(chunk) {
            let e = p - ds.y_model(k);
            acc += e * e;
        }
    }
    acc / idxs.len() as f64
}

fn denorm_scale(ds: &WindowedDataset) -> f64 {
    ds.stats().map_or(1.0, |st| st.y_std * st.y_std)
}

fn validation_loss(model: &mut Model, ds: &WindowedDataset) -> f64 {
    let range = ds.val_targets();
    let preds = predict_range(model, ds, range.clone());
    let mut acc = 0.0;
    for (p, k) in preds.iter().zip(range) {
        let e = p - ds.y_raw(k);
        acc += e * e;
    }
    acc / preds.len() as f64
}

/// Trains one model: shuffled mini-batches, Adam, full validation pass per
/// epoch, early stopping after `patience` epochs without improvement, and
/// restoration of the best-validation snapshot (not the last state).
pub fn train(spec: &ModelSpec, ds: &WindowedDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    if spec.s != ds.s() {
        return Err(Error::InvalidInput(format!(
            "model window length {} does not match dataset window length {}",
            spec.s,
            ds.s()
        )));
    }
    if ds.bounds().is_none() {
        return Err(Error::InvalidInput("training requires a split dataset".into()));
    }

    let mut model = Model::new(spec.clone())?;
    let adam = cfg.adam();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = ds.train_targets().collect();
    let denorm = denorm_scale(ds);

    let mut trace: Vec<EpochRecord> = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_theta: Vec<f64> = model.store().snapshot();
    let mut stall = 0;
    let mut stopped_early = false;

    let mut x = Mat::zeros(0, ds.s());
    let mut yb: Vec<f64> = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut loss_acc = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            x.resize(chunk.len(), ds.s());
            ds.fill_batch(chunk, &mut x);
            yb.clear();
            yb.extend(chunk.iter().map(|&k| ds.y_model(k)));
            model.store_mut().zero_grad();
            let loss = model.loss_grad_batch(&x, &yb);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, trace });
            }
            if model.store_mut().adam_step(&adam).is_err() {
                return Err(Error::Diverged { epoch, trace });
            }
            loss_acc += loss * chunk.len() as f64;
        }
        let train_loss = denorm * loss_acc / order.len() as f64;
        let val_loss = validation_loss(&mut model, ds);
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, trace });
        }
        trace.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_theta = model.store().snapshot();
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.store_mut().restore(&best_theta);
    Ok(TrainOutcome {
        model,
        report: TrainReport {
            trace,
            best_epoch,
            best_val_loss: best_val,
            stopped_early,
        },
    })
}

/// Scores of one completed run.
pub struct RunRecord {
    pub seed: u64,
    pub train_r2: f64,
    pub test_r2: f64,
    /// Final training MSE on the model (standardized) scale.
    pub train_mse_model: f64,
    pub report: TrainReport,
    pub model: Model,
}

/// Runs `n_runs` trainings with seeds `cfg.seed, cfg.seed + 1, …`, scoring
/// each on de-normalized predictions. Failures are recorded per run and do
/// not abort the remaining runs; selection of the best run (by training R²)
/// is the evaluator's job.
pub fn run_repeats(
    spec: &ModelSpec,
    ds: &WindowedDataset,
    cfg: &TrainConfig,
    n_runs: usize,
) -> Result<Vec<(u64, Result<RunRecord>)>> {
    if n_runs < 1 {
        return Err(Error::InvalidInput("n_runs must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(n_runs);
    for i in 0..n_runs {
        let seed = cfg.seed.wrapping_add(i as u64);
        out.push((seed, run_once(spec, ds, cfg, seed)));
    }
    Ok(out)
}

fn run_once(
    spec: &ModelSpec,
    ds: &WindowedDataset,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<RunRecord> {
    let run_spec = ModelSpec {
        seed,
        ..spec.clone()
    };
    let run_cfg = TrainConfig { seed, ..*cfg };
    let outcome = train(&run_spec, ds, &run_cfg)?;
    let mut model = outcome.model;
    let train_range = ds.train_targets();
    let preds_train = predict_range(&mut model, ds, train_range.clone());
    let refs_train: Vec<f64> = train_range.clone().map(|k| ds.y_raw(k)).collect();
    let train_r2 = r2_score(&refs_train, &preds_train)?;
    let test_range = ds.test_targets();
    let preds_test = predict_range(&mut model, ds, test_range.clone());
    let refs_test: Vec<f64> = test_range.map(|k| ds.y_raw(k)).collect();
    let test_r2 = r2_score(&refs_test, &preds_test)?;
    let train_mse_model = mse_model_scale(&mut model, ds, train_range);
    Ok(RunRecord {
        seed,
        train_r2,
        test_r2,
        train_mse_model,
        report: outcome.report,
        model,
    })
}

/// Writes the per-epoch loss trace as `epoch,train_loss,val_loss`.
pub fn write_trace_csv(trace: &[EpochRecord], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "epoch,train_loss,val_loss")?;
    for rec in trace {
        writeln!(w, "{},{:.17e},{:.17e}", rec.epoch, rec.train_loss, rec.val_loss)?;
    }
    w.flush()?;
    Ok(())
}
