use alloc::format;
use alloc::vec::Vec;

use super::lif::{integrate_int, lif_step_int, NeuronStateInt};
use crate::afe::EventRaster;
use crate::{Error, Result};

/// Deployable layer: 8-bit weights, per-neuron shifts and 16-bit thresholds.
///
/// The weighted input to neuron `j` is `(sum_i w[i][j] * x_i) << weight_shift`,
/// accumulated in 32 bits with saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<i8>,
    pub weight_shift: u8,
    /// Float-to-integer weight scale `s` (kept for audit and dequantisation).
    pub weight_scale: f32,
    pub syn_shift: Vec<u8>,
    pub mem_shift: Vec<u8>,
    pub threshold: Vec<i16>,
}

impl QuantizedLayer {
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> i8 {
        self.weights[i * self.outputs + j]
    }

    /// Scale between float state and integer state, `s * 2^weight_shift`.
    pub fn state_scale(&self) -> f64 {
        f64::from(self.weight_scale) * libm::ldexp(1.0, i32::from(self.weight_shift))
    }
}

/// Integer SynNet; the last layer is the non-spiking readout.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub layers: Vec<QuantizedLayer>,
}

impl QuantizedModel {
    pub fn input_channels(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn readout(&self) -> &QuantizedLayer {
        self.layers.last().expect("model has a readout layer")
    }

    /// Readout threshold in integer membrane units; firing means `v >= this`.
    pub fn readout_threshold(&self) -> i32 {
        i32::from(self.readout().threshold[0])
    }

    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.outputs).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config("model has no layers"));
        }
        for (k, l) in self.layers.iter().enumerate() {
            let n = l.outputs;
            if l.weights.len() != l.inputs * n
                || l.syn_shift.len() != n
                || l.mem_shift.len() != n
                || l.threshold.len() != n
            {
                return Err(Error::config(format!("layer {k} has inconsistent parameter sizes")));
            }
            if k > 0 && self.layers[k - 1].outputs != l.inputs {
                return Err(Error::config(format!("layer {k} does not chain from layer {}", k - 1)));
            }
            if l.weights.contains(&i8::MIN) {
                return Err(Error::config(format!("layer {k} has a weight of -128; range is +-127")));
            }
            if l.threshold.iter().any(|&t| t <= 0) {
                return Err(Error::config(format!("layer {k} has a non-positive threshold")));
            }
            if l.weight_shift > 16 || l.syn_shift.iter().chain(&l.mem_shift).any(|&d| d > 30) {
                return Err(Error::config(format!("layer {k} has an out-of-range shift")));
            }
        }
        if self.readout().outputs != 1 {
            return Err(Error::config("readout layer must have exactly one neuron"));
        }
        Ok(())
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReadoutTrace {
    /// Readout membrane potential after each step.
    pub v_readout: Vec<i16>,
    /// `[hidden layer][timestep]` spike counts.
    pub hidden_spike_counts: Vec<Vec<u32>>,
    /// Presynaptic events times fan-out, summed over layers and steps.
    pub synop_count: u64,
    pub neuron_updates: u64,
    /// Clipped state registers and accumulators per layer.
    pub saturation_events: Vec<u64>,
}

impl ReadoutTrace {
    pub fn timesteps(&self) -> usize {
        self.v_readout.len()
    }

    pub fn peak(&self) -> Option<i16> {
        self.v_readout.iter().copied().max()
    }

    pub fn total_saturations(&self) -> u64 {
        self.saturation_events.iter().sum()
    }
}

/// Stateful integer engine for streaming use.
#[derive(Debug, Clone)]
pub struct IntEngine<'m> {
    model: &'m QuantizedModel,
    state: Vec<Vec<NeuronStateInt>>,
    activity: Vec<Vec<u16>>,
    acc: Vec<i32>,
    trace: ReadoutTrace,
}

impl<'m> IntEngine<'m> {
    pub fn new(model: &'m QuantizedModel) -> Result<Self> {
        model.validate()?;
        let hidden = model.layers.len() - 1;
        let widest = model.layers.iter().map(|l| l.outputs).max().unwrap_or(0);
        Ok(Self {
            model,
            state: model.layers.iter().map(|l| alloc::vec![NeuronStateInt::default(); l.outputs]).collect(),
            activity: model.layers.iter().map(|l| alloc::vec![0; l.outputs]).collect(),
            acc: alloc::vec![0; widest],
            trace: ReadoutTrace {
                hidden_spike_counts: alloc::vec![Vec::new(); hidden],
                saturation_events: alloc::vec![0; model.layers.len()],
                ..ReadoutTrace::default()
            },
        })
    }

    /// Advances one timestep with `input[c]` events on each input channel and
    /// returns the readout membrane potential.
    pub fn step(&mut self, input: &[u16]) -> Result<i16> {
        let model = self.model;
        if input.len() != model.input_channels() {
            return Err(Error::invalid(format!(
                "input has {} channels, model expects {}",
                input.len(),
                model.input_channels()
            )));
        }
        let last = model.layers.len() - 1;
        for (k, layer) in model.layers.iter().enumerate() {
            let acc = &mut self.acc[..layer.outputs];
            acc.fill(0);
            let pre: &[u16] = if k == 0 { input } else { &self.activity[k - 1] };
            let mut sat = 0u64;
            let mut events = 0u64;
            for (i, &x) in pre.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                events += u64::from(x);
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (a, &w) in acc.iter_mut().zip(row) {
                    let (v, o1) = i32::from(w).overflowing_mul(i32::from(x));
                    let sum = a.checked_add(v);
                    match (o1, sum) {
                        (false, Some(s)) => *a = s,
                        _ => {
                            sat += 1;
                            *a = a.saturating_add(i32::from(w).saturating_mul(i32::from(x)));
                        }
                    }
                }
            }
            self.trace.synop_count += events * layer.outputs as u64;

            let factor = 1i32 << layer.weight_shift;
            let mut spikes = 0u32;
            let states = &mut self.state[k];
            let out = &mut self.activity[k];
            for j in 0..layer.outputs {
                let weighted = match acc[j].checked_mul(factor) {
                    Some(v) => v,
                    None => {
                        sat += 1;
                        acc[j].saturating_mul(factor)
                    }
                };
                let r = if k == last {
                    integrate_int(states[j], weighted, layer.syn_shift[j], layer.mem_shift[j])
                } else {
                    lif_step_int(states[j], weighted, layer.syn_shift[j], layer.mem_shift[j], layer.threshold[j])
                };
                states[j] = r.state;
                sat += u64::from(r.saturations);
                out[j] = u16::from(r.spike);
                spikes += u32::from(r.spike);
            }
            self.trace.neuron_updates += layer.outputs as u64;
            self.trace.saturation_events[k] += sat;
            if k < last {
                self.trace.hidden_spike_counts[k].push(spikes);
            }
        }
        let v = self.state[last][0].v_mem;
        self.trace.v_readout.push(v);
        Ok(v)
    }

    /// Feeds every timestep of `raster`, continuing from the current state.
    pub fn run(&mut self, raster: &EventRaster) -> Result<()> {
        let mut column = alloc::vec![0u16; raster.channels()];
        for t in 0..raster.timesteps() {
            raster.column_into(t, &mut column);
            self.step(&column)?;
        }
        Ok(())
    }

    pub fn trace(&self) -> &ReadoutTrace {
        &self.trace
    }

    pub fn into_trace(self) -> ReadoutTrace {
        self.trace
    }
}

/// Runs a fresh engine over `raster`.
pub fn forward_int(model: &QuantizedModel, raster: &EventRaster) -> Result<ReadoutTrace> {
    if raster.channels() != model.input_channels() {
        return Err(Error::invalid(format!(
            "raster has {} channels, model expects {}",
            raster.channels(),
            model.input_channels()
        )));
    }
    let mut engine = IntEngine::new(model)?;
    engine.run(raster)?;
    Ok(engine.into_trace())
}

/// Target prediction: the readout reached `threshold` at some step.
///
/// `i32::MIN` always fires and `i32::MAX` never does, since the membrane is
/// 16-bit.
pub fn predict(trace: &ReadoutTrace, threshold: i32) -> bool {
    trace.peak().is_some_and(|p| i32::from(p) >= threshold)
}
