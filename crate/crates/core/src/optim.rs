//! AdamW, global-norm gradient clipping and the linear warm-up / linear decay
//! learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Learning rate that rises linearly from 0 to `peak` over `warmup_steps`,
/// then falls linearly back to 0 at `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule<T> {
    pub peak: T,
    pub warmup_steps: usize,
    pub total_steps: usize,
}

impl<T: Scalar> LinearSchedule<T> {
    pub fn new(peak: T, warmup_steps: usize, total_steps: usize) -> Result<Self> {
        if warmup_steps > total_steps {
            return Err(Error::Config(format!(
                "warmup ({warmup_steps} steps) longer than training ({total_steps} steps)"
            )));
        }
        if !peak.is_finite() || peak < T::zero() {
            return Err(Error::Config(format!(
                "peak learning rate {peak} is invalid"
            )));
        }
        Ok(Self {
            peak,
            warmup_steps,
            total_steps,
        })
    }

    pub fn lr_at_step(&self, step: usize) -> Result<T> {
        if step > self.total_steps {
            return Err(Error::StepOutOfRange {
                step,
                total: self.total_steps,
            });
        }
        if step <= self.warmup_steps {
            if self.warmup_steps == 0 {
                return Ok(self.peak);
            }
            return Ok(self.peak * T::from_count(step) / T::from_count(self.warmup_steps));
        }
        let remaining = T::from_count(self.total_steps - step);
        let span = T::from_count(self.total_steps - self.warmup_steps);
        Ok(self.peak * remaining / span)
    }
}

/// Global L2 norm over a set of tensors.
pub fn global_norm<T: Scalar>(tensors: &[&[T]]) -> T {
    tensors
        .iter()
        .flat_map(|t| t.iter())
        .map(|g| *g * *g)
        .sum::<T>()
        .sqrt()
}

/// Rescales all gradients by `max_norm / g` when their global norm `g`
/// exceeds `max_norm`. Returns the norm measured before clipping.
pub fn clip_gradients<T: Scalar>(grads: &mut [&mut [T]], max_norm: T) -> Result<T> {
    if grads.iter().flat_map(|g| g.iter()).any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradients"));
    }
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|g| *g * *g)
        .sum::<T>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut().flat_map(|g| g.iter_mut()) {
            *g *= scale;
        }
    }
    Ok(norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdamWConfig<T: Scalar> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub weight_decay: T,
}

impl<T: Scalar> Default for AdamWConfig<T> {
    fn default() -> Self {
        Self {
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            weight_decay: T::lit(0.01),
        }
    }
}

/// AdamW state: one first/second moment buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdamW<T: Scalar> {
    pub config: AdamWConfig<T>,
    pub step: u64,
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(config: AdamWConfig<T>, shapes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first_moment: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn moments(&self) -> (&[Vec<T>], &[Vec<T>]) {
        (&self.first_moment, &self.second_moment)
    }

    /// One update: bias-corrected Adam step, then decoupled weight decay
    /// `θ ← θ − lr·λ·θ`.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]], lr: T) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.first_moment.len(),
                actual: params.len().min(grads.len()),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first_moment) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::DimensionMismatch {
                    expected: m.len(),
                    actual: if p.len() != m.len() { p.len() } else { g.len() },
                });
            }
        }
        if lr.is_nan() || lr < T::zero() {
            return Err(Error::Config(format!("learning rate {lr} is negative")));
        }

        self.step += 1;
        let AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let correction1 = T::one() - beta1.powi(t);
        let correction2 = T::one() - beta2.powi(t);

        for ((param, grad), (m, v)) in params.iter_mut().zip(grads).zip(
            self.first_moment
                .iter_mut()
                .zip(self.second_moment.iter_mut()),
        ) {
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + (T::one() - beta1) * g;
                v[i] = beta2 * v[i] + (T::one() - beta2) * g * g;
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                param[i] -= lr * weight_decay * param[i];
            }
        }
        Ok(())
    }
}
