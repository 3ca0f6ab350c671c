use crate::error::{Error, Result};

use super::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one group of parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let zeros: Vec<Vec<f64>> = params.into_iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            config,
            second_moment: zeros.clone(),
            first_moment: zeros,
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor>,
        grads: &[Tensor],
    ) -> Result<()> {
        let params: Vec<&mut Tensor> = params.into_iter().collect();
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::Shape {
                op: "adam_step",
                left: vec![params.len()],
                right: vec![grads.len()],
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first_moment) {
            if p.shape() != g.shape() || p.len() != m.len() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / correction1;
                let v_hat = *vi / correction2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
