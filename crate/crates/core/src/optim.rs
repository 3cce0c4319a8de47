//! First-order optimizer shared by body refinement, pose initialization and
//! scene fitting.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// ADAM (Kingma and Ba) with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: alloc::vec![0.0; dim], v: alloc::vec![0.0; dim], t: 0 }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    /// Proposed update for `grad` without touching the moment estimates.
    pub fn peek(&self, grad: &[f64]) -> Vec<f64> {
        let mut probe = self.clone();
        probe.update(grad)
    }

    /// Advances the moment estimates and returns the parameter delta.
    pub fn update(&mut self, grad: &[f64]) -> Vec<f64> {
        assert_eq!(grad.len(), self.m.len(), "gradient dimension mismatch");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut delta = Vec::with_capacity(grad.len());
        for (i, &g) in grad.iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            delta.push(-self.lr * mh / (vh.sqrt() + self.eps));
        }
        delta
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let d = self.update(grad);
        for (p, d) in params.iter_mut().zip(d) {
            *p += d;
        }
    }
}
