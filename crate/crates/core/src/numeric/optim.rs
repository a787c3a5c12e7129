//! Adam and plain SGD over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::Adam, lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub config: OptimizerConfig,
    pub step: u64,
    /// First moments, one per parameter.
    pub m: Vec<T>,
    /// Second moments, one per parameter.
    pub v: Vec<T>,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(config: OptimizerConfig, parameter_count: usize) -> Self {
        let moments = match config.kind {
            OptimizerKind::Adam => parameter_count,
            OptimizerKind::Sgd => 0,
        };
        OptimizerState { config, step: 0, m: vec![T::zero(); moments], v: vec![T::zero(); moments] }
    }

    /// Number of parameters this state was sized for.
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Applies one update. `params` are the model's parameter slices in
    /// flattening order; `grads` is the matching flat gradient.
    pub fn step(&mut self, params: Vec<&mut [T]>, grads: &[T]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        if total != grads.len() {
            return Err(Error::shape(format!("{total} parameters vs {} gradients", grads.len())));
        }
        if self.config.kind == OptimizerKind::Adam && self.m.len() != total {
            return Err(Error::shape(format!("optimizer sized for {} parameters, model has {total}", self.m.len())));
        }
        self.step += 1;
        let lr = T::of(self.config.lr);
        match self.config.kind {
            OptimizerKind::Sgd => {
                let mut at = 0;
                for slice in params {
                    for p in slice.iter_mut() {
                        *p -= lr * grads[at];
                        at += 1;
                    }
                }
            }
            OptimizerKind::Adam => {
                let b1 = T::of(self.config.beta1);
                let b2 = T::of(self.config.beta2);
                let eps = T::of(self.config.eps);
                let t = self.step as i32;
                let c1 = T::of(1.0 - self.config.beta1.powi(t));
                let c2 = T::of(1.0 - self.config.beta2.powi(t));
                let mut at = 0;
                for slice in params {
                    for p in slice.iter_mut() {
                        let g = grads[at];
                        let m = b1 * self.m[at] + (T::one() - b1) * g;
                        let v = b2 * self.v[at] + (T::one() - b2) * g * g;
                        self.m[at] = m;
                        self.v[at] = v;
                        let m_hat = m / c1;
                        let v_hat = v / c2;
                        *p -= lr * m_hat / (v_hat.sqrt() + eps);
                        at += 1;
                    }
                }
            }
        }
        Ok(())
    }
}
