//! Float training: forward pass sharing the integer engine's decay law,
//! PeakLoss, surrogate-gradient BPTT and Adam.

mod adam;
mod backprop;
mod forward;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::Adam;
pub use backprop::{backward, zero_grads, BoxcarSurrogate, WeightGrads};
pub use forward::{forward_float, FloatTrace, LayerTape};
pub use gradcheck::{grad_check, GradCheck, FD_STEP};
pub use loss::{argmax_first, PeakLoss};
pub use trainer::{evaluate_float, fit, train, train_with_progress, EpochStats, TrainConfig, TrainOutcome};

use crate::afe::EventRaster;

/// An encoded sample with its binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRaster {
    pub raster: EventRaster,
    pub target: bool,
}
