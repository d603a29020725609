//! Float to 8-bit-weight / 16-bit-state conversion and its accuracy audit.
//!
//! Per layer, weights are scaled by `s = 127 / max|w|` and rounded to nearest
//! (ties to even). The integer state runs at `S = s * 2^k`, where the weight
//! shift `k` is the largest value not above `log2(headroom)` that keeps every
//! quantised threshold `round(theta * S)` at or below `threshold_ceiling`.
//! The ceiling leaves room in the 16-bit registers for membrane and synaptic
//! values above threshold.

use alloc::format;
use alloc::vec::Vec;

use crate::snn::{forward_int, FloatLayer, FloatModel, QuantizedLayer, QuantizedModel};
use crate::train::{forward_float, LabeledRaster};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantConfig {
    /// Upper bound on the per-layer state gain `2^k` (a power of two).
    pub headroom: u32,
    /// Largest quantised threshold the shift search aims for.
    pub threshold_ceiling: i16,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self { headroom: 256, threshold_ceiling: 4096 }
    }
}

#[inline]
fn round_even(x: f64) -> f64 {
    libm::rint(x)
}

fn quantize_layer(k: usize, layer: &FloatLayer, cfg: &QuantConfig) -> Result<QuantizedLayer> {
    let max = layer.max_abs_weight();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::config(format!("layer {k} has no non-zero weights to scale")));
    }
    // the scale is stored as f32, so quantise with exactly that value
    let scale = f64::from((127.0 / max) as f32);
    let weights = layer.weights.iter().map(|&w| round_even(w * scale).clamp(-127.0, 127.0) as i8).collect();

    let max_shift = cfg.headroom.max(1).ilog2().min(16) as u8;
    let theta_max = layer.threshold.iter().copied().fold(0.0, f64::max);
    let ceiling = f64::from(cfg.threshold_ceiling.max(1));
    let mut shift = max_shift;
    while shift > 0 && round_even(theta_max * scale * libm::ldexp(1.0, i32::from(shift))) > ceiling {
        shift -= 1;
    }
    let state_scale = scale * libm::ldexp(1.0, i32::from(shift));
    let threshold = layer
        .threshold
        .iter()
        .enumerate()
        .map(|(j, &th)| {
            let q = round_even(th * state_scale);
            if q > f64::from(i16::MAX) {
                Err(Error::config(format!(
                    "layer {k} neuron {j}: threshold {th} needs {q} > 32767 even without a weight shift; \
                     reduce the headroom or raise the weights relative to the threshold"
                )))
            } else if q < 1.0 {
                Err(Error::config(format!("layer {k} neuron {j}: threshold {th} quantises to {q}")))
            } else {
                Ok(q as i16)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(QuantizedLayer {
        inputs: layer.inputs,
        outputs: layer.outputs,
        weights,
        weight_shift: shift,
        weight_scale: scale as f32,
        syn_shift: layer.syn_shift.clone(),
        mem_shift: layer.mem_shift.clone(),
        threshold,
    })
}

pub fn quantize(model: &FloatModel) -> Result<QuantizedModel> {
    quantize_with(model, &QuantConfig::default())
}

pub fn quantize_with(model: &FloatModel, cfg: &QuantConfig) -> Result<QuantizedModel> {
    model.validate()?;
    let layers = model.layers.iter().enumerate().map(|(k, l)| quantize_layer(k, l, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(QuantizedModel { layers })
}

/// Float model that the integer model represents: `w_q / s`, `theta_q / S`.
pub fn dequantize(model: &QuantizedModel) -> FloatModel {
    FloatModel {
        layers: model
            .layers
            .iter()
            .map(|l| {
                let s = f64::from(l.weight_scale);
                let state = l.state_scale();
                FloatLayer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|&w| f64::from(w) / s).collect(),
                    syn_shift: l.syn_shift.clone(),
                    mem_shift: l.mem_shift.clone(),
                    threshold: l.threshold.iter().map(|&t| f64::from(t) / state).collect(),
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerQuantStats {
    pub weight_scale: f64,
    pub weight_shift: u8,
    pub max_abs_error: f64,
    pub saturation_events: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantReport {
    pub layers: Vec<LayerQuantStats>,
    pub samples: usize,
    pub float_accuracy: f64,
    pub quantized_accuracy: f64,
    /// Largest `|v_int / S - v_float|` on the readout, in float units.
    pub max_readout_discrepancy: f64,
    /// Samples on which the two models disagree.
    pub disagreements: usize,
}

impl QuantReport {
    /// Float minus quantised accuracy, in percentage points.
    pub fn gap_points(&self) -> f64 {
        100.0 * (self.float_accuracy - self.quantized_accuracy)
    }
}

/// Runs both models over `data` and compares their decisions.
pub fn audit(float_model: &FloatModel, q_model: &QuantizedModel, data: &[LabeledRaster]) -> Result<QuantReport> {
    if !float_model.same_topology(q_model.layers.iter().map(|l| (l.inputs, l.outputs))) {
        return Err(Error::invalid("float and quantised models have different topologies"));
    }
    q_model.validate()?;
    let mut layers: Vec<LayerQuantStats> = float_model
        .layers
        .iter()
        .zip(&q_model.layers)
        .map(|(f, q)| {
            let s = f64::from(q.weight_scale);
            let max_abs_error =
                f.weights.iter().zip(&q.weights).map(|(&w, &wq)| libm::fabs(f64::from(wq) / s - w)).fold(0.0, f64::max);
            LayerQuantStats { weight_scale: s, weight_shift: q.weight_shift, max_abs_error, saturation_events: 0 }
        })
        .collect();

    let theta_f = float_model.readout().threshold[0];
    let theta_q = q_model.readout_threshold();
    let readout_scale = q_model.readout().state_scale();
    let (mut float_ok, mut quant_ok, mut disagreements) = (0usize, 0usize, 0usize);
    let mut max_disc: f64 = 0.0;
    for sample in data {
        let ft = forward_float(float_model, &sample.raster)?;
        let qt = forward_int(q_model, &sample.raster)?;
        for (l, &s) in layers.iter_mut().zip(&qt.saturation_events) {
            l.saturation_events += s;
        }
        for (&vf, &vq) in ft.readout.iter().zip(&qt.v_readout) {
            max_disc = max_disc.max(libm::fabs(f64::from(vq) / readout_scale - vf));
        }
        let pf = ft.peak() >= theta_f;
        let pq = qt.peak().is_some_and(|p| i32::from(p) >= theta_q);
        float_ok += usize::from(pf == sample.target);
        quant_ok += usize::from(pq == sample.target);
        disagreements += usize::from(pf != pq);
    }
    let n = data.len().max(1) as f64;
    Ok(QuantReport {
        layers,
        samples: data.len(),
        float_accuracy: float_ok as f64 / n,
        quantized_accuracy: quant_ok as f64 / n,
        max_readout_discrepancy: max_disc,
        disagreements,
    })
}
