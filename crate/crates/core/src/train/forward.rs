use alloc::format;
use alloc::vec::Vec;

use crate::afe::EventRaster;
use crate::snn::FloatModel;
use crate::{Error, Result};

/// Recorded activations of one layer, each `timesteps x outputs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerTape {
    pub i_syn: Vec<f64>,
    /// Membrane potential before threshold/reset.
    pub v_pre: Vec<f64>,
    pub spikes: Vec<f64>,
}

/// Float forward pass with everything BPTT needs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FloatTrace {
    pub timesteps: usize,
    /// Readout membrane potential per step (the training output `x`).
    pub readout: Vec<f64>,
    pub layers: Vec<LayerTape>,
}

impl FloatTrace {
    pub fn peak(&self) -> f64 {
        self.readout.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spike counts per hidden layer per step.
    pub fn hidden_spike_counts(&self, model: &FloatModel) -> Vec<Vec<u32>> {
        let hidden = model.layers.len() - 1;
        (0..hidden)
            .map(|k| {
                let n = model.layers[k].outputs;
                (0..self.timesteps)
                    .map(|t| self.layers[k].spikes[t * n..(t + 1) * n].iter().filter(|&&s| s > 0.0).count() as u32)
                    .collect()
            })
            .collect()
    }
}

/// Real-valued counterpart of the integer engine with decays `1 - 2^-d`.
pub fn forward_float(model: &FloatModel, raster: &EventRaster) -> Result<FloatTrace> {
    if raster.channels() != model.input_channels() {
        return Err(Error::invalid(format!(
            "raster has {} channels, model expects {}",
            raster.channels(),
            model.input_channels()
        )));
    }
    let steps = raster.timesteps();
    let last = model.layers.len() - 1;
    let mut tapes: Vec<LayerTape> = model
        .layers
        .iter()
        .map(|l| LayerTape {
            i_syn: alloc::vec![0.0; steps * l.outputs],
            v_pre: alloc::vec![0.0; steps * l.outputs],
            spikes: alloc::vec![0.0; steps * l.outputs],
        })
        .collect();
    let mut i_state: Vec<Vec<f64>> = model.layers.iter().map(|l| alloc::vec![0.0; l.outputs]).collect();
    let mut v_state = i_state.clone();
    let mut input = alloc::vec![0.0; raster.channels()];
    let mut acc = Vec::new();
    let mut readout = Vec::with_capacity(steps);

    for t in 0..steps {
        for (c, x) in input.iter_mut().enumerate() {
            *x = f64::from(raster.count(c, t));
        }
        for (k, layer) in model.layers.iter().enumerate() {
            let n = layer.outputs;
            acc.clear();
            acc.resize(n, 0.0);
            {
                let pre: &[f64] =
                    if k == 0 { &input } else { &tapes[k - 1].spikes[t * layer.inputs..(t + 1) * layer.inputs] };
                for (i, &x) in pre.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[i * n..(i + 1) * n];
                    for (a, &w) in acc.iter_mut().zip(row) {
                        *a += w * x;
                    }
                }
            }
            let tape = &mut tapes[k];
            for j in 0..n {
                let i_new = layer.syn_decay(j) * i_state[k][j] + acc[j];
                let v_new = layer.mem_decay(j) * v_state[k][j] + i_new;
                i_state[k][j] = i_new;
                tape.i_syn[t * n + j] = i_new;
                tape.v_pre[t * n + j] = v_new;
                if k != last && v_new >= layer.threshold[j] {
                    tape.spikes[t * n + j] = 1.0;
                    v_state[k][j] = v_new - layer.threshold[j];
                } else {
                    v_state[k][j] = v_new;
                }
            }
        }
        readout.push(v_state[last][0]);
    }
    Ok(FloatTrace { timesteps: steps, readout, layers: tapes })
}
