use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Adam with two learning-rate groups: the embedding table uses `lr_lower`,
/// everything above it (LSTM, projection, CRF) uses `lr_upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr_lower: f64,
    pub lr_upper: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr_lower: f64, lr_upper: f64) -> Self {
        AdamConfig {
            lr_lower,
            lr_upper,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn lr_for(&self, tensor: &str) -> f64 {
        if tensor == "embed" {
            self.lr_lower
        } else {
            self.lr_upper
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    /// leading entries of `embed` (the padding row) that are never updated
    frozen_prefix: usize,
}

impl OptimizerState {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.data.len()])
            .collect();
        OptimizerState {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
            frozen_prefix: params.encoder.embed.cols(),
        }
    }

    /// One bias-corrected Adam update. Gradients are checked before any
    /// parameter is touched, so a rejected step leaves everything unchanged.
    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        let grad_tensors = grads.tensors();
        if grad_tensors.len() != self.first.len() {
            return Err(Error::Shape("gradient tensor count".into()));
        }
        for (g, m) in grad_tensors.iter().zip(&self.first) {
            if g.data.len() != m.len() {
                return Err(Error::Shape(format!(
                    "gradient {} has {} entries, expected {}",
                    g.name,
                    g.data.len(),
                    m.len()
                )));
            }
            if g.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("gradient {}", g.name)));
            }
        }
        let mut param_tensors = params.tensors_mut();
        for ((name, p), m) in param_tensors.iter().zip(&self.first) {
            if p.len() != m.len() {
                return Err(Error::Shape(format!("parameter {name}")));
            }
        }

        self.step += 1;
        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (idx, ((name, p), g)) in param_tensors.iter_mut().zip(&grad_tensors).enumerate() {
            let lr = self.config.lr_for(name);
            let skip = if *name == "embed" {
                self.frozen_prefix
            } else {
                0
            };
            let m = &mut self.first[idx];
            let v = &mut self.second[idx];
            for j in skip..p.len() {
                let gj = g.data[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    opt: &mut OptimizerState,
) -> Result<()> {
    opt.step(params, grads)
}
