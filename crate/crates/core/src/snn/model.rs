use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{decay_factor, SynNetSpec};
use crate::{Error, Result};

/// Real-valued layer. Weights are `inputs x outputs`, row-major by input.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub syn_shift: Vec<u8>,
    pub mem_shift: Vec<u8>,
    pub threshold: Vec<f64>,
}

impl FloatLayer {
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.outputs + j]
    }

    pub fn syn_decay(&self, j: usize) -> f64 {
        decay_factor(self.syn_shift[j])
    }

    pub fn mem_decay(&self, j: usize) -> f64 {
        decay_factor(self.mem_shift[j])
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, w| libm::fmax(m, libm::fabs(*w)))
    }
}

/// Float SynNet. Every layer but the last spikes; the last is the
/// non-spiking readout whose membrane potential is the network output.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatModel {
    pub layers: Vec<FloatLayer>,
}

impl FloatModel {
    pub fn input_channels(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn readout(&self) -> &FloatLayer {
        self.layers.last().expect("model has a readout layer")
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
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
                return Err(Error::config(format!(
                    "layer {k} expects {} inputs but layer {} has {} outputs",
                    l.inputs,
                    k - 1,
                    self.layers[k - 1].outputs
                )));
            }
            if l.syn_shift.iter().chain(&l.mem_shift).any(|&d| d == 0 || d > 30) {
                return Err(Error::config(format!("layer {k} has a decay shift outside 1..=30")));
            }
            if l.weights.iter().chain(&l.threshold).any(|x| !x.is_finite()) {
                return Err(Error::config(format!("layer {k} has non-finite parameters")));
            }
        }
        Ok(())
    }

    /// Same layer shapes, in order.
    pub fn same_topology(&self, other_shapes: impl Iterator<Item = (usize, usize)>) -> bool {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).eq(other_shapes)
    }
}

/// Builds a float SynNet with weights uniform in `+-sqrt(1/fan_in)`.
pub fn build_model(spec: &SynNetSpec, seed: u64) -> Result<FloatModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mem = spec.membrane_shift()?;
    let shapes = spec.layer_shapes();
    let mut layers = Vec::with_capacity(shapes.len());
    for (k, &(inputs, outputs)) in shapes.iter().enumerate() {
        let bound = libm::sqrt(1.0 / inputs as f64);
        let weights = (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect();
        let syn_shift = if k < spec.hidden_widths.len() {
            spec.synaptic_shifts(k)?
        } else {
            // readout synapse and membrane both use tau_m
            alloc::vec![mem; outputs]
        };
        layers.push(FloatLayer {
            inputs,
            outputs,
            weights,
            syn_shift,
            mem_shift: alloc::vec![mem; outputs],
            threshold: alloc::vec![1.0; outputs],
        });
    }
    Ok(FloatModel { layers })
}
