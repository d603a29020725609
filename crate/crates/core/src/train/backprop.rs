use alloc::vec::Vec;

use super::FloatTrace;
use crate::afe::EventRaster;
use crate::snn::FloatModel;

/// Boxcar pseudo-derivative of the spike nonlinearity:
/// `slope` inside `|v - theta| < 1 / (2 slope)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxcarSurrogate {
    pub slope: f64,
}

impl BoxcarSurrogate {
    #[inline]
    pub fn derivative(&self, v: f64, threshold: f64) -> f64 {
        if libm::fabs(v - threshold) < 0.5 / self.slope {
            self.slope
        } else {
            0.0
        }
    }
}

/// Per-layer weight gradients, laid out like the weights.
pub type WeightGrads = Vec<Vec<f64>>;

pub fn zero_grads(model: &FloatModel) -> WeightGrads {
    model.layers.iter().map(|l| alloc::vec![0.0; l.weights.len()]).collect()
}

/// Backpropagation through time for one sample, accumulating into `grads`.
///
/// `d_readout[t]` is `dL/dx_t` for the readout membrane. Resets are detached
/// (the subtracted threshold carries no gradient) and hidden spikes use
/// `surrogate` in place of the step function's derivative.
pub fn backward(
    model: &FloatModel,
    raster: &EventRaster,
    trace: &FloatTrace,
    d_readout: &[f64],
    surrogate: BoxcarSurrogate,
    grads: &mut WeightGrads,
) {
    let steps = trace.timesteps;
    let last = model.layers.len() - 1;
    // dL/d(output) of the layer being processed, `steps x outputs`
    let mut upstream: Vec<f64> = d_readout.to_vec();

    for k in (0..=last).rev() {
        let layer = &model.layers[k];
        let tape = &trace.layers[k];
        let (n, m) = (layer.outputs, layer.inputs);
        let mut g_v = alloc::vec![0.0; n];
        let mut g_i = alloc::vec![0.0; n];
        let mut g_in = if k > 0 { alloc::vec![0.0; steps * m] } else { Vec::new() };
        let g_w = &mut grads[k];

        for t in (0..steps).rev() {
            for j in 0..n {
                let direct = if k == last {
                    upstream[t * n + j]
                } else {
                    upstream[t * n + j] * surrogate.derivative(tape.v_pre[t * n + j], layer.threshold[j])
                };
                g_v[j] = layer.mem_decay(j) * g_v[j] + direct;
                g_i[j] = layer.syn_decay(j) * g_i[j] + g_v[j];
            }
            for i in 0..m {
                let x = if k == 0 { f64::from(raster.count(i, t)) } else { trace.layers[k - 1].spikes[t * m + i] };
                let row = &layer.weights[i * n..(i + 1) * n];
                let g_row = &mut g_w[i * n..(i + 1) * n];
                if x != 0.0 {
                    for (g, &gi) in g_row.iter_mut().zip(&g_i) {
                        *g += x * gi;
                    }
                }
                if k > 0 {
                    g_in[t * m + i] = row.iter().zip(&g_i).map(|(w, gi)| w * gi).sum();
                }
            }
        }
        upstream = g_in;
    }
}
