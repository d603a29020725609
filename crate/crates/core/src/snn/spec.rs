use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// SynNet architecture: a feed-forward chain of LIF layers whose neurons are
/// spread evenly over `tau_n = 2^n * base_tau_ms`, `n = 1..=tau_counts[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynNetSpec {
    pub input_channels: usize,
    pub hidden_widths: Vec<usize>,
    pub tau_counts: Vec<usize>,
    pub base_tau_ms: f64,
    pub membrane_tau_ms: f64,
    /// Time represented by one network step when converting time constants
    /// into decay shifts.
    pub dt_ms: f64,
    pub readout_neurons: usize,
}

impl Default for SynNetSpec {
    fn default() -> Self {
        Self::new(alloc::vec![160, 60, 60, 60, 60, 60], alloc::vec![2, 2, 4, 4, 8, 8])
    }
}

impl SynNetSpec {
    pub fn new(hidden_widths: Vec<usize>, tau_counts: Vec<usize>) -> Self {
        Self {
            input_channels: 16,
            hidden_widths,
            tau_counts,
            base_tau_ms: 10.0,
            membrane_tau_ms: 20.0,
            dt_ms: 10.0,
            readout_neurons: 1,
        }
    }

    /// Hidden plus readout neurons.
    pub fn total_neurons(&self) -> usize {
        self.hidden_widths.iter().sum::<usize>() + self.readout_neurons
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 {
            return Err(Error::config("network needs at least one input channel"));
        }
        if self.hidden_widths.len() != self.tau_counts.len() {
            return Err(Error::config(format!(
                "{} hidden widths but {} time-constant counts",
                self.hidden_widths.len(),
                self.tau_counts.len()
            )));
        }
        for (i, (&h, &k)) in self.hidden_widths.iter().zip(&self.tau_counts).enumerate() {
            if h == 0 {
                return Err(Error::config(format!("hidden layer {i} is empty")));
            }
            if k == 0 || !k.is_power_of_two() || k > h {
                return Err(Error::config(format!(
                    "layer {i}: time-constant count {k} must be a power of two between 1 and the width {h}"
                )));
            }
        }
        if !(self.dt_ms > 0.0) || !(self.base_tau_ms > 0.0) || !(self.membrane_tau_ms > 0.0) {
            return Err(Error::config("dt and time constants must be positive"));
        }
        if self.readout_neurons != 1 {
            return Err(Error::config(format!(
                "only single-readout networks are supported, got {}",
                self.readout_neurons
            )));
        }
        self.membrane_shift()?;
        for (i, &k) in self.tau_counts.iter().enumerate() {
            for n in 1..=k {
                self.tau_shift(n).map_err(|e| match e {
                    Error::Config(m) => Error::config(format!("layer {i}: {m}")),
                    other => other,
                })?;
            }
        }
        Ok(())
    }

    /// `tau_n = 2^n * base_tau_ms`.
    pub fn synaptic_tau_ms(&self, n: usize) -> f64 {
        self.base_tau_ms * libm::pow(2.0, n as f64)
    }

    fn tau_shift(&self, n: usize) -> Result<u8> {
        dash_code(self.synaptic_tau_ms(n), self.dt_ms)
    }

    pub fn membrane_shift(&self) -> Result<u8> {
        dash_code(self.membrane_tau_ms, self.dt_ms)
    }

    /// Per-neuron synaptic time-constant index `n` (1-based) for hidden layer
    /// `layer`. Neurons are split into equal contiguous groups; any remainder
    /// goes to the longest time constant.
    pub fn tau_groups(&self, layer: usize) -> Vec<usize> {
        let width = self.hidden_widths[layer];
        let k = self.tau_counts[layer];
        let group = width / k;
        (0..width).map(|j| (j / group + 1).min(k)).collect()
    }

    /// Synaptic decay shift per neuron of hidden layer `layer`.
    pub fn synaptic_shifts(&self, layer: usize) -> Result<Vec<u8>> {
        self.tau_groups(layer).into_iter().map(|n| self.tau_shift(n)).collect()
    }

    /// (inputs, outputs) of every layer including the readout.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_channels;
        for &h in &self.hidden_widths {
            shapes.push((fan_in, h));
            fan_in = h;
        }
        shapes.push((fan_in, self.readout_neurons));
        shapes
    }
}

/// Shift `d` with `tau / dt = 2^d`, `d >= 1`.
pub fn dash_code(tau_ms: f64, dt_ms: f64) -> Result<u8> {
    let ratio = tau_ms / dt_ms;
    let exp = libm::log2(ratio);
    let d = libm::round(exp);
    if !(ratio > 1.0) || libm::fabs(exp - d) > 1e-9 || d > 30.0 {
        return Err(Error::config(format!(
            "tau {tau_ms} ms / dt {dt_ms} ms = {ratio} is not a power of two >= 2; bitshift decay needs one"
        )));
    }
    Ok(d as u8)
}

/// Multiplicative decay `1 - 2^-d` realised by `x - (x >> d)`.
#[inline]
pub fn decay_factor(shift: u8) -> f64 {
    1.0 - libm::ldexp(1.0, -i32::from(shift))
}
