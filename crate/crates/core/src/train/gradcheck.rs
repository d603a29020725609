use super::{backward, forward_float, zero_grads, BoxcarSurrogate, LabeledRaster, PeakLoss};
use crate::snn::FloatModel;
use crate::{Error, Result};

/// Result of comparing readout-weight gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Weights compared.
    pub probes: usize,
    /// Probes where either gradient was non-negligible.
    pub informative: usize,
}

impl GradCheck {
    /// All probed gradients were zero, so the check says nothing.
    pub fn inconclusive(&self) -> bool {
        self.informative == 0
    }

    pub fn passes(&self, tol: f64) -> bool {
        !self.inconclusive() && self.max_relative_error < tol
    }
}

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Checks BPTT gradients of PeakLoss with respect to the readout weights,
/// which sit on a spike-free path. At most `max_probes` weights are probed.
pub fn grad_check(
    model: &FloatModel,
    sample: &LabeledRaster,
    loss: &PeakLoss,
    dt_ms: f64,
    max_probes: usize,
) -> Result<GradCheck> {
    model.validate()?;
    let last = model.layers.len() - 1;
    let trace = forward_float(model, &sample.raster)?;
    let (_, d_readout) = loss.loss_with_grad(&trace.readout, sample.target, dt_ms)?;
    let mut grads = zero_grads(model);
    // the surrogate never touches the readout path
    backward(model, &sample.raster, &trace, &d_readout, BoxcarSurrogate { slope: 1.0 }, &mut grads);

    let probes = model.layers[last].weights.len().min(max_probes);
    if probes == 0 {
        return Err(Error::invalid("readout layer has no weights to probe"));
    }
    let mut perturbed = model.clone();
    let mut max_rel: f64 = 0.0;
    let mut informative = 0;
    for (idx, &analytic) in grads[last].iter().enumerate().take(probes) {
        let w0 = model.layers[last].weights[idx];
        perturbed.layers[last].weights[idx] = w0 + FD_STEP;
        let up = loss.loss(&forward_float(&perturbed, &sample.raster)?.readout, sample.target, dt_ms)?;
        perturbed.layers[last].weights[idx] = w0 - FD_STEP;
        let down = loss.loss(&forward_float(&perturbed, &sample.raster)?.readout, sample.target, dt_ms)?;
        perturbed.layers[last].weights[idx] = w0;

        let numeric = (up - down) / (2.0 * FD_STEP);
        let scale = libm::fmax(libm::fabs(numeric), libm::fabs(analytic));
        if scale > 1e-9 {
            informative += 1;
            max_rel = max_rel.max(libm::fabs(numeric - analytic) / scale);
        }
    }
    Ok(GradCheck { max_relative_error: max_rel, probes, informative })
}
