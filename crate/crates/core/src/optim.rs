//! Adam with bias correction.
//!
//! No weight decay, clipping or schedule. When driving a [`SirenNetwork`]
//! every updated parameter is rounded back onto the `f32` grid.

use crate::error::{CoinError, Result};
use crate::siren::{GradientSet, SirenNetwork};
use crate::wire::{Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(CoinError::InvalidConfig(format!("lr must be positive, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(CoinError::InvalidConfig(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CoinError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, param_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of a raw parameter slice.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        for (what, len) in [("parameters", params.len()), ("gradients", grads.len())] {
            if len != n {
                return Err(CoinError::ShapeMismatch {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for i in 0..n {
            let g = grads[i];
            let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
            let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / correction1;
            let v_hat = v / correction2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }

    pub(crate) fn write_to(&self, w: &mut Writer) {
        w.f64(self.config.lr);
        w.f64(self.config.beta1);
        w.f64(self.config.beta2);
        w.f64(self.config.epsilon);
        w.u64(self.step);
        w.u32(self.first_moment.len() as u32);
        for &m in &self.first_moment {
            w.f64(m);
        }
        for &v in &self.second_moment {
            w.f64(v);
        }
    }

    pub(crate) fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let config = AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            epsilon: r.f64()?,
        };
        let step = r.u64()?;
        let n = r.u32()? as usize;
        let first_moment = r.f64_vec(n)?;
        let second_moment = r.f64_vec(n)?;
        Ok(Self {
            config,
            step,
            first_moment,
            second_moment,
        })
    }
}

/// Applies one Adam update to `net` in place.
pub fn adam_step(net: &mut SirenNetwork, grads: &GradientSet, state: &mut AdamState) -> Result<()> {
    if grads.architecture() != net.architecture() {
        return Err(CoinError::InvalidArchitecture(format!(
            "gradient architecture {} does not match network {}",
            grads.architecture(),
            net.architecture()
        )));
    }
    let params = net.params_mut();
    state.update(params, grads.values())?;
    for p in params.iter_mut() {
        *p = *p as f32 as f64;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siren::Architecture;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let arch = Architecture::with_default_freq(2, 4).unwrap();
        let mut net = SirenNetwork::init_siren(arch, 1);
        let before = net.clone();
        let mut state = AdamState::new(AdamConfig::default(), arch.param_count()).unwrap();
        adam_step(&mut net, &GradientSet::zeros(arch), &mut state).unwrap();
        assert_eq!(net, before);
        assert_eq!(state.step(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε).
        let config = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(config, 3).unwrap();
        let mut params = vec![1.0, 1.0, 1.0];
        state.update(&mut params, &[0.5, -2.0, 3e4]).unwrap();
        let expected = [
            1.0 - 0.01 * 0.5 / (0.5 + 1e-8),
            1.0 + 0.01 * 2.0 / (2.0 + 1e-8),
            1.0 - 0.01 * 3e4 / (3e4 + 1e-8),
        ];
        for (p, e) in params.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15, "{p} vs {e}");
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let config = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(config, 1).unwrap();
        let mut theta = vec![1.0];
        for _ in 0..500 {
            let g = vec![2.0 * theta[0]];
            state.update(&mut theta, &g).unwrap();
        }
        assert!(theta[0].abs() < 1e-3, "{}", theta[0]);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::new(AdamConfig::default(), 3).unwrap();
        let mut params = vec![0.0; 3];
        assert!(matches!(
            state.update(&mut params, &[1.0, 2.0]),
            Err(CoinError::ShapeMismatch { .. })
        ));
        let arch = Architecture::with_default_freq(1, 2).unwrap();
        let other = Architecture::with_default_freq(1, 3).unwrap();
        let mut net = SirenNetwork::zeros(arch);
        let mut state = AdamState::new(AdamConfig::default(), arch.param_count()).unwrap();
        assert!(adam_step(&mut net, &GradientSet::zeros(other), &mut state).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        for config in [
            AdamConfig { lr: 0.0, ..Default::default() },
            AdamConfig { beta1: 1.0, ..Default::default() },
            AdamConfig { beta2: 0.0, ..Default::default() },
            AdamConfig { epsilon: -1.0, ..Default::default() },
        ] {
            assert!(AdamState::new(config, 1).is_err());
        }
    }

    proptest! {
        #[test]
        fn first_step_is_bounded_by_lr(
            grads in prop::collection::vec(-1e6f64..1e6, 1..32),
            lr in 1e-6f64..1.0,
        ) {
            let config = AdamConfig { lr, ..AdamConfig::default() };
            let mut state = AdamState::new(config, grads.len()).unwrap();
            let mut params = vec![0.0; grads.len()];
            state.update(&mut params, &grads).unwrap();
            for p in params {
                prop_assert!(p.abs() <= lr * (1.0 + 1e-12));
            }
        }

        #[test]
        fn state_survives_serialization(
            grads in prop::collection::vec(-10.0f64..10.0, 1..64),
            steps in 0usize..5,
        ) {
            let mut state = AdamState::new(AdamConfig::default(), grads.len()).unwrap();
            let mut params = vec![0.0; grads.len()];
            for _ in 0..steps {
                state.update(&mut params, &grads).unwrap();
            }
            let mut w = Writer::default();
            state.write_to(&mut w);
            let bytes = w.into_bytes();
            let mut r = Reader::new(&bytes);
            let back = AdamState::read_from(&mut r).unwrap();
            prop_assert_eq!(back, state);
            prop_assert!(r.is_empty());
        }
    }
}
