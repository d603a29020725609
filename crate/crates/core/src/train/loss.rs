use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// PeakLoss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakLoss {
    /// Averaging window after the peak, in milliseconds.
    pub window_ms: f64,
    /// Target value for the windowed mean on positive samples.
    pub target: f64,
    /// Weight of the non-target term.
    pub nontarget_weight: f64,
}

impl Default for PeakLoss {
    fn default() -> Self {
        Self { window_ms: 140.0, target: 1.5, nontarget_weight: 1.4 }
    }
}

impl PeakLoss {
    pub fn window_steps(&self, dt_ms: f64) -> Result<usize> {
        let steps = libm::round(self.window_ms / dt_ms);
        if !(steps >= 1.0) {
            return Err(Error::invalid(format!(
                "peak window {} ms is shorter than one {dt_ms} ms step",
                self.window_ms
            )));
        }
        Ok(steps as usize)
    }

    /// Loss for readout trace `x` with target `y`.
    ///
    /// * `y = true`: `(mean(x[m .. m + M]) - g)^2`, `m` the first argmax.
    /// * `y = false`: `w_l * mean(x^2)`.
    pub fn loss(&self, x: &[f64], y: bool, dt_ms: f64) -> Result<f64> {
        self.loss_and_grad(x, y, dt_ms, None)
    }

    /// Loss and `dL/dx`. The argmax index is treated as constant.
    pub fn loss_with_grad(&self, x: &[f64], y: bool, dt_ms: f64) -> Result<(f64, Vec<f64>)> {
        let mut grad = alloc::vec![0.0; x.len()];
        let loss = self.loss_and_grad(x, y, dt_ms, Some(&mut grad))?;
        Ok((loss, grad))
    }

    fn loss_and_grad(&self, x: &[f64], y: bool, dt_ms: f64, grad: Option<&mut Vec<f64>>) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::invalid("readout trace is empty"));
        }
        if y {
            let m = argmax_first(x);
            let end = (m + self.window_steps(dt_ms)?).min(x.len());
            let len = (end - m) as f64;
            let mean = x[m..end].iter().sum::<f64>() / len;
            let diff = mean - self.target;
            if let Some(g) = grad {
                let d = 2.0 * diff / len;
                g[m..end].iter_mut().for_each(|v| *v = d);
            }
            Ok(diff * diff)
        } else {
            let n = x.len() as f64;
            let mse = x.iter().map(|v| v * v).sum::<f64>() / n;
            if let Some(g) = grad {
                for (gv, &xv) in g.iter_mut().zip(x) {
                    *gv = self.nontarget_weight * 2.0 * xv / n;
                }
            }
            Ok(self.nontarget_weight * mse)
        }
    }
}

/// Index of the first maximum.
pub fn argmax_first(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v > x[best] {
            best = i;
        }
    }
    best
}
