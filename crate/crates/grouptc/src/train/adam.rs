//! Adam with decoupled weight decay and a reduce-on-plateau scheduler.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub min_learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-5,
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            plateau_factor: 0.5,
            plateau_patience: 2,
            min_learning_rate: 1e-5,
            batch_size: 32,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("plateau_factor", self.plateau_factor),
            ("min_learning_rate", self.min_learning_rate),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.weight_decay < 0.0 {
            return Err("weight_decay must be nonnegative".into());
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return Err("betas must lie in (0, 1)".into());
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err("batch_size and epochs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub learning_rate: f64,
    pub best_val_loss: f64,
    pub bad_epochs: usize,
}

impl AdamState {
    pub fn new(param_count: usize, config: &TrainConfig) -> AdamState {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            learning_rate: config.learning_rate,
            best_val_loss: f64::INFINITY,
            bad_epochs: 0,
        }
    }
}

/// One optimizer step: bias-corrected Adam plus decoupled weight decay.
pub fn adam_step(params: &mut [f64], grads: &[f64], config: &TrainConfig, state: &mut AdamState) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as f64;
    let lr = state.learning_rate;
    let bc1 = 1.0 - config.beta1.powf(t);
    let bc2 = 1.0 - config.beta2.powf(t);
    for i in 0..params.len() {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        params[i] -= lr * (mhat / (vhat.sqrt() + config.epsilon));
        params[i] -= lr * config.weight_decay * params[i];
    }
}

/// Reduce-on-plateau update at the end of an epoch. Returns true when the
/// learning rate was reduced.
pub fn plateau_update(state: &mut AdamState, val_loss: f64, config: &TrainConfig) -> bool {
    if val_loss < state.best_val_loss {
        state.best_val_loss = val_loss;
        state.bad_epochs = 0;
        return false;
    }
    state.bad_epochs += 1;
    if state.bad_epochs > config.plateau_patience {
        state.bad_epochs = 0;
        let reduced = (state.learning_rate * config.plateau_factor).max(config.min_learning_rate);
        let changed = reduced < state.learning_rate;
        state.learning_rate = reduced;
        return changed;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_sign_scaled() {
        let config = TrainConfig { learning_rate: 0.1, weight_decay: 0.0, ..Default::default() };
        let mut state = AdamState::new(3, &config);
        let mut params = vec![0.0, 0.0, 0.0];
        let grads = vec![0.5, -2.0, 1e-9];
        adam_step(&mut params, &grads, &config, &mut state);
        // bias-corrected first step moves by ~lr in the gradient's direction
        assert!((params[0] + 0.1).abs() < 1e-6);
        assert!((params[1] - 0.1).abs() < 1e-6);
        assert!(params[2].abs() < 0.1);
    }

    #[test]
    fn zero_grad_zero_decay_is_identity() {
        let config = TrainConfig { weight_decay: 0.0, ..Default::default() };
        let mut state = AdamState::new(2, &config);
        let mut params = vec![1.5, -0.5];
        adam_step(&mut params, &[0.0, 0.0], &config, &mut state);
        assert_eq!(params, vec![1.5, -0.5]);
    }

    #[test]
    fn weight_decay_shrinks_params() {
        let config =
            TrainConfig { learning_rate: 0.1, weight_decay: 0.1, ..Default::default() };
        let mut state = AdamState::new(1, &config);
        let mut params = vec![1.0];
        adam_step(&mut params, &[0.0], &config, &mut state);
        assert!((params[0] - (1.0 - 0.1 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn plateau_halves_once_after_three_bad_epochs() {
        let config = TrainConfig {
            learning_rate: 8e-4,
            min_learning_rate: 1e-5,
            ..Default::default()
        };
        let mut state = AdamState::new(1, &config);
        assert!(!plateau_update(&mut state, 1.0, &config)); // sets the best
        assert!(!plateau_update(&mut state, 1.2, &config)); // bad 1
        assert!(!plateau_update(&mut state, 1.2, &config)); // bad 2
        assert!(plateau_update(&mut state, 1.2, &config)); // bad 3 -> halve
        assert!((state.learning_rate - 4e-4).abs() < 1e-18);
        assert!(!plateau_update(&mut state, 1.2, &config)); // counter reset
    }

    #[test]
    fn learning_rate_floored() {
        let config = TrainConfig {
            learning_rate: 1.5e-5,
            min_learning_rate: 1e-5,
            plateau_patience: 0,
            ..Default::default()
        };
        let mut state = AdamState::new(1, &config);
        plateau_update(&mut state, 1.0, &config);
        assert!(plateau_update(&mut state, 2.0, &config));
        assert_eq!(state.learning_rate, 1e-5);
        assert!(!plateau_update(&mut state, 2.0, &config)); // already at floor
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig { beta1: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
