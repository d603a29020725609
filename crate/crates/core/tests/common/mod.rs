//! Random small integer models, a straight-line reference recurrence and the
//! float comparison shared by the oracle and acceptance tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snnkws_core::afe::EventRaster;
use snnkws_core::quantize::dequantize;
use snnkws_core::snn::{QuantizedLayer, QuantizedModel};
use snnkws_core::train::forward_float;

pub struct Instance {
    pub model: QuantizedModel,
    pub raster: EventRaster,
}

pub struct OracleTrace {
    pub readout: Vec<i16>,
    /// `spikes[layer][t]` lists the neurons that fired.
    pub spikes: Vec<Vec<Vec<usize>>>,
}

/// Readout error bound at step `t` in LSB.
pub fn step_tolerance(t: usize) -> f64 {
    2.0 * (t as f64 + 1.0)
}

fn random_model(rng: &mut ChaCha8Rng) -> QuantizedModel {
    let n_layers = rng.gen_range(1..=3);
    let mut fan_in = rng.gen_range(1..=16);
    let mut layers = Vec::with_capacity(n_layers);
    for k in 0..n_layers {
        let readout = k + 1 == n_layers;
        let outputs = if readout { 1 } else { rng.gen_range(1..=32) };
        let weights = (0..fan_in * outputs).map(|_| rng.gen_range(-127i8..=127)).collect();
        let threshold = (0..outputs)
            .map(|_| if readout { rng.gen_range(2049..=4096) } else { rng.gen_range(256..=4096) })
            .collect();
        layers.push(QuantizedLayer {
            inputs: fan_in,
            outputs,
            weights,
            weight_shift: rng.gen_range(0..=4),
            weight_scale: rng.gen_range(8.0f32..200.0),
            syn_shift: (0..outputs).map(|_| rng.gen_range(1..=3)).collect(),
            mem_shift: (0..outputs).map(|_| rng.gen_range(1..=2)).collect(),
            threshold,
        });
        fan_in = outputs;
    }
    QuantizedModel { layers }
}

fn random_raster(rng: &mut ChaCha8Rng, channels: usize) -> EventRaster {
    let steps = rng.gen_range(1..=30);
    let density = rng.gen_range(0.05..0.5);
    let mut r = EventRaster::zeros(channels, steps, 100.0);
    for c in 0..channels {
        for t in 0..steps {
            if rng.gen_bool(density) {
                r.set(c, t, rng.gen_range(1..=3));
            }
        }
    }
    r
}

fn fits16(x: i64) -> bool {
    (i64::from(i16::MIN)..=i64::from(i16::MAX)).contains(&x)
}

/// Scalar recurrence in 64-bit arithmetic. `None` when any register or the
/// weighted input leaves its hardware range.
pub fn oracle(model: &QuantizedModel, raster: &EventRaster) -> Option<OracleTrace> {
    let last = model.layers.len() - 1;
    let mut i_syn: Vec<Vec<i64>> = model.layers.iter().map(|l| vec![0; l.outputs]).collect();
    let mut v_mem = i_syn.clone();
    let mut spikes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); last];
    let mut readout = Vec::new();
    for t in 0..raster.timesteps() {
        let mut x: Vec<i64> = (0..raster.channels()).map(|c| i64::from(raster.count(c, t))).collect();
        for (k, layer) in model.layers.iter().enumerate() {
            let mut fired = Vec::new();
            for j in 0..layer.outputs {
                let mut acc = 0i64;
                for (i, &xi) in x.iter().enumerate() {
                    acc += i64::from(layer.weights[i * layer.outputs + j]) * xi;
                }
                let weighted = acc * (1i64 << layer.weight_shift);
                if weighted.abs() > i64::from(i32::MAX) {
                    return None;
                }
                let ds = 1i64 << layer.syn_shift[j];
                let dm = 1i64 << layer.mem_shift[j];
                // Rust's `/` truncates toward zero
                let i_new = i_syn[k][j] - i_syn[k][j] / ds + weighted;
                let v_new = v_mem[k][j] - v_mem[k][j] / dm + i_new;
                if !fits16(i_new) || !fits16(v_new) {
                    return None;
                }
                i_syn[k][j] = i_new;
                v_mem[k][j] = v_new;
                if k != last && v_new >= i64::from(layer.threshold[j]) {
                    v_mem[k][j] -= i64::from(layer.threshold[j]);
                    fired.push(j);
                }
            }
            if k == last {
                readout.push(v_mem[k][0] as i16);
            } else {
                x = (0..layer.outputs).map(|j| i64::from(fired.contains(&j))).collect();
                spikes[k].push(fired);
            }
        }
    }
    Some(OracleTrace { readout, spikes })
}

/// True when no hidden float membrane lands within `margin` LSB of its
/// threshold, so rounding cannot flip a spike.
pub fn clear_of_thresholds(model: &QuantizedModel, raster: &EventRaster, margin: f64) -> bool {
    let float = dequantize(model);
    let trace = forward_float(&float, raster).expect("valid instance");
    let last = model.layers.len() - 1;
    model.layers[..last].iter().zip(&trace.layers).all(|(l, tape)| {
        let s = l.state_scale();
        tape.v_pre.iter().enumerate().all(|(idx, &v)| {
            let th = f64::from(l.threshold[idx % l.outputs]);
            (v * s - th).abs() > margin
        })
    })
}

/// `n` random non-saturating instances clear of hidden thresholds.
pub fn instances(seed: u64, n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let model = random_model(&mut rng);
        let raster = random_raster(&mut rng, model.layers[0].inputs);
        if oracle(&model, &raster).is_none() || !clear_of_thresholds(&model, &raster, 64.0) {
            continue;
        }
        out.push(Instance { model, raster });
    }
    out
}

/// Largest per-step excess over the tolerance (`<= 0` passes) and the
/// largest absolute readout error in LSB.
pub fn float_discrepancy(model: &QuantizedModel, raster: &EventRaster, int_readout: &[i16]) -> (f64, f64) {
    let float = dequantize(model);
    let trace = forward_float(&float, raster).expect("valid instance");
    let s = model.readout().state_scale();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for (t, (&vi, &vf)) in int_readout.iter().zip(&trace.readout).enumerate() {
        let err = (f64::from(vi) - vf * s).abs();
        worst = worst.max(err);
        worst_excess = worst_excess.max(err - step_tolerance(t));
    }
    (worst_excess, worst)
}
