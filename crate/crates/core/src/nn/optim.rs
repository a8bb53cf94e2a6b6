use serde::{Deserialize, Serialize};

use super::{Gradients, MlpModel, NnError};

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(model: &mut MlpModel) -> Self {
        let shapes: Vec<usize> = model.parameters_mut().iter().map(|p| p.len()).collect();
        Self::with_shapes(&shapes)
    }

    pub fn with_shapes(shapes: &[usize]) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Update `params` in place from `grads` (same order and shapes).
    pub fn update(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[&[f64]],
        learning_rate: f64,
    ) -> Result<(), NnError> {
        if params.len() != self.m.len()
            || grads.len() != self.m.len()
            || params
                .iter()
                .zip(grads)
                .zip(&self.m)
                .any(|((p, g), m)| p.len() != m.len() || g.len() != m.len())
        {
            return Err(NnError::ShapeMismatch);
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p[i] -= learning_rate * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }

    pub fn step_model(
        &mut self,
        model: &mut MlpModel,
        grads: &Gradients,
        learning_rate: f64,
    ) -> Result<(), NnError> {
        let g = grads.slices();
        let mut p = model.parameters_mut();
        self.update(&mut p, &g, learning_rate)
    }
}
