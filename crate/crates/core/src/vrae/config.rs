use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnealMode {
    Constant,
    Cyclical,
}

/// KL weight schedule. Cyclical mode splits training into `cycles` equal
/// cycles; each ramps β linearly from 0 to `beta_max` over the first
/// `ramp_fraction` of the cycle, then holds `beta_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub mode: AnnealMode,
    pub cycles: usize,
    pub ramp_fraction: f64,
    pub beta_max: f64,
}

impl AnnealSchedule {
    pub fn constant(beta: f64) -> Self {
        AnnealSchedule {
            mode: AnnealMode::Constant,
            cycles: 1,
            ramp_fraction: 1.0,
            beta_max: beta,
        }
    }

    pub fn cyclical(cycles: usize, ramp_fraction: f64, beta_max: f64) -> Self {
        AnnealSchedule {
            mode: AnnealMode::Cyclical,
            cycles,
            ramp_fraction,
            beta_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_max >= 0.0) || !self.beta_max.is_finite() {
            return Err(Error::invalid(format!("beta_max must be >= 0, got {}", self.beta_max)));
        }
        if self.mode == AnnealMode::Cyclical {
            if self.cycles == 0 {
                return Err(Error::invalid("cyclical schedule needs at least one cycle"));
            }
            if !(self.ramp_fraction > 0.0 && self.ramp_fraction <= 1.0) {
                return Err(Error::invalid(format!(
                    "ramp fraction must lie in (0, 1], got {}",
                    self.ramp_fraction
                )));
            }
        }
        Ok(())
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule::constant(1.0)
    }
}

/// KL weight at optimizer step `global_step` out of `total_steps`.
pub fn beta_at(schedule: &AnnealSchedule, global_step: usize, total_steps: usize) -> Result<f64> {
    if global_step >= total_steps {
        return Err(Error::invalid(format!(
            "step {global_step} outside schedule of {total_steps} steps"
        )));
    }
    match schedule.mode {
        AnnealMode::Constant => Ok(schedule.beta_max),
        AnnealMode::Cyclical => {
            let cycle_len = total_steps as f64 / schedule.cycles.max(1) as f64;
            let tau = (global_step as f64 % cycle_len) / cycle_len;
            if tau < schedule.ramp_fraction {
                Ok(schedule.beta_max * tau / schedule.ramp_fraction)
            } else {
                Ok(schedule.beta_max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VraeConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub latent_dim: usize,
    pub learning_rate: f64,
    pub dropout_rate: f64,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub anneal: AnnealSchedule,
    pub seed: u64,
}

impl Default for VraeConfig {
    fn default() -> Self {
        VraeConfig {
            input_dim: 6,
            hidden_units: 90,
            latent_dim: 20,
            learning_rate: 0.0005,
            dropout_rate: 0.2,
            clip_norm: 5.0,
            batch_size: 64,
            epochs: 200,
            anneal: AnnealSchedule::default(),
            seed: 0,
        }
    }
}

impl VraeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 || self.latent_dim == 0 {
            return Err(Error::invalid("input, hidden and latent dimensions must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::invalid(format!("clip norm must be positive, got {}", self.clip_norm)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        self.anneal.validate()
    }
}
