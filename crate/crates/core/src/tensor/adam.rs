//! Adam optimizer with bias correction over a named parameter set.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Named trainable tensors in registration order. The order fixes both
/// optimizer state slots and checkpoint layout.
#[derive(Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    /// Register a trainable tensor under a unique name; returns a handle to
    /// the same storage.
    pub fn register(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<Tensor> {
        let name = name.into();
        if !tensor.requires_grad() {
            return Err(Error::Invalid(format!(
                "parameter {name} does not track gradients"
            )));
        }
        if self.entries.iter().any(|(n, _)| *n == name) {
            return Err(Error::Invalid(format!("duplicate parameter name {name}")));
        }
        self.entries.push((name, tensor.clone()));
        Ok(tensor)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grads(&self) {
        for (_, t) in &self.entries {
            t.zero_grad();
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Adam with bias-corrected moment estimates. State is kept per parameter
/// slot in registration order and persists across steps.
pub struct Adam {
    config: AdamConfig,
    step_count: u64,
    slots: Vec<Moments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Adam {
        Adam {
            config,
            step_count: 0,
            slots: Vec::new(),
        }
    }

    /// One update over every parameter; gradients are consumed (zeroed).
    pub fn step(&mut self, params: &ParamSet) -> Result<()> {
        if self.slots.is_empty() {
            self.slots = params
                .iter()
                .map(|(_, t)| Moments {
                    m: vec![0.0; t.numel()],
                    v: vec![0.0; t.numel()],
                })
                .collect();
        } else if self.slots.len() != params.len() {
            return Err(Error::Invalid(format!(
                "optimizer initialized for {} parameters, got {}",
                self.slots.len(),
                params.len()
            )));
        }
        self.step_count += 1;
        let c = self.config;
        let bias1 = 1.0 - c.beta1.powi(self.step_count as i32);
        let bias2 = 1.0 - c.beta2.powi(self.step_count as i32);

        for ((name, tensor), slot) in params.iter().zip(&mut self.slots) {
            let grad = tensor
                .grad()
                .ok_or_else(|| Error::Invalid(format!("parameter {name} has no gradient")))?;
            let mut values = tensor.values();
            for i in 0..values.len() {
                let g = grad[i] + c.weight_decay * values[i];
                slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * g;
                slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = slot.m[i] / bias1;
                let v_hat = slot.v[i] / bias2;
                values[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
            tensor.set_values(&values)?;
            tensor.zero_grad();
        }
        Ok(())
    }
}
