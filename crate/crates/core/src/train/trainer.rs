use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{backward, forward_float, zero_grads, Adam, BoxcarSurrogate, LabeledRaster, PeakLoss};
use crate::snn::{build_model, FloatModel, SynNetSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub loss: PeakLoss,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub surrogate_slope: f64,
    /// Share of the data held out for model selection.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            loss: PeakLoss::default(),
            learning_rate: 1e-3,
            batch_size: 16,
            surrogate_slope: 2.0,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let l = &self.loss;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch size must be at least 1"));
        }
        if !(l.window_ms > 0.0) || !(l.target > 0.0) || !(l.nontarget_weight > 0.0) {
            return Err(Error::config("peak window, target and non-target weight must be positive"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!("learning rate {} is not usable", self.learning_rate)));
        }
        if !(self.surrogate_slope > 0.0) {
            return Err(Error::config("surrogate slope must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation fraction must be in [0, 1)"));
        }
        Ok(())
    }

    pub fn surrogate(&self) -> BoxcarSurrogate {
        BoxcarSurrogate { slope: self.surrogate_slope }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Equal to `train_loss` when there is no validation split.
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: FloatModel,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

/// Loss and accuracy of `model` on `samples`, predicting a target when the
/// readout peak reaches the readout threshold.
pub fn evaluate_float(
    model: &FloatModel,
    samples: &[&LabeledRaster],
    loss: &PeakLoss,
    dt_ms: f64,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let theta = model.readout().threshold[0];
    let mut total = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let trace = forward_float(model, &s.raster)?;
        total += loss.loss(&trace.readout, s.target, dt_ms)?;
        correct += usize::from((trace.peak() >= theta) == s.target);
    }
    let n = samples.len() as f64;
    Ok((total / n, correct as f64 / n))
}

/// Surrogate-gradient BPTT on PeakLoss with Adam.
pub fn train(spec: &SynNetSpec, data: &[LabeledRaster], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(spec, data, cfg, |_| {})
}

pub fn train_with_progress(
    spec: &SynNetSpec,
    data: &[LabeledRaster],
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let positives = data.iter().filter(|s| s.target).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::config(format!(
            "training data must contain both classes ({positives} targets of {})",
            data.len()
        )));
    }
    let model = build_model(spec, cfg.seed)?;
    fit(model, data, cfg, spec.dt_ms, &mut progress)
}

/// Trains an existing model in place of a freshly initialised one.
pub fn fit(
    mut model: FloatModel,
    data: &[LabeledRaster],
    cfg: &TrainConfig,
    dt_ms: f64,
    progress: &mut impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = libm::round(cfg.validation_fraction * data.len() as f64) as usize;
    let n_val = n_val.min(data.len().saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);
    let val: Vec<&LabeledRaster> = val_idx.iter().map(|&i| &data[i]).collect();
    let mut train_idx = train_idx.to_vec();

    let surrogate = cfg.surrogate();
    let mut adam = Adam::new(&model, cfg.learning_rate);
    let mut best: Option<(f64, usize, FloatModel)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(cfg.batch_size) {
            let mut grads = zero_grads(&model);
            for &i in batch {
                let sample = &data[i];
                let trace = forward_float(&model, &sample.raster)?;
                let (loss, d_readout) = cfg.loss.loss_with_grad(&trace.readout, sample.target, dt_ms)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch, detail: format!("non-finite loss on sample {i}") });
                }
                epoch_loss += loss;
                backward(&model, &sample.raster, &trace, &d_readout, surrogate, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().flatten().for_each(|g| *g *= scale);
            adam.step(&mut model, &grads);
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        if !train_loss.is_finite() || model.layers.iter().flat_map(|l| &l.weights).any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch, detail: format!("train loss {train_loss}") });
        }
        let (val_loss, val_acc) = if val.is_empty() {
            let all: Vec<&LabeledRaster> = train_idx.iter().map(|&i| &data[i]).collect();
            let (_, acc) = evaluate_float(&model, &all, &cfg.loss, dt_ms)?;
            (train_loss, acc)
        } else {
            evaluate_float(&model, &val, &cfg.loss, dt_ms)?
        };
        if !val_loss.is_finite() {
            return Err(Error::Diverged { epoch, detail: format!("validation loss {val_loss}") });
        }
        let stats = EpochStats { epoch, train_loss, val_loss, val_acc };
        progress(&stats);
        history.push(stats);
        if best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { model, best_epoch, history })
}
