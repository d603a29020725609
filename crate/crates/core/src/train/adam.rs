use alloc::vec::Vec;

use super::WeightGrads;
use crate::snn::FloatModel;

/// Adam over all weight matrices of a model.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(model: &FloatModel, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = model.layers.iter().map(|l| alloc::vec![0.0; l.weights.len()]).collect();
        Self { learning_rate, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn step(&mut self, model: &mut FloatModel, grads: &WeightGrads) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.step));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.step));
        for (k, layer) in model.layers.iter_mut().enumerate() {
            for (idx, w) in layer.weights.iter_mut().enumerate() {
                let g = grads[k][idx];
                let m = &mut self.m[k][idx];
                let v = &mut self.v[k][idx];
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.eps);
            }
        }
    }
}
