use serde::{Deserialize, Serialize};

use super::OptError;

/// Settings for the shedding MILP. Frequencies are absolute Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UflsOptConfig {
    pub n_stages: usize,
    pub dt_opt: f64,
    pub horizon_s: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min_hz: f64,
    pub omega_ss_min_hz: f64,
    pub omega_ss_max_hz: f64,
    pub g_bar: f64,
    pub omega_sep_hz: f64,
    pub omega_shed_max_hz: f64,
    /// Lowest admissible threshold.
    pub omega_shed_min_hz: f64,
    pub big_m: f64,
    pub deadband_steps: usize,
    pub delay_steps: usize,
    pub time_limit_s: f64,
    pub mip_rel_gap: f64,
}

impl Default for UflsOptConfig {
    fn default() -> Self {
        let dt_opt = 0.05;
        UflsOptConfig {
            n_stages: 4,
            dt_opt,
            horizon_s: 15.0,
            v_min: 0.9,
            v_max: 1.1,
            omega_min_hz: 58.0,
            omega_ss_min_hz: 59.5,
            omega_ss_max_hz: 60.7,
            g_bar: 0.075,
            omega_sep_hz: 0.2,
            omega_shed_max_hz: 59.5,
            omega_shed_min_hz: 57.0,
            big_m: 500.0,
            deadband_steps: steps_for(0.2, dt_opt),
            delay_steps: steps_for(0.1, dt_opt),
            time_limit_s: 300.0,
            mip_rel_gap: 1e-4,
        }
    }
}

/// Number of whole steps closest to `seconds`.
pub fn steps_for(seconds: f64, dt: f64) -> usize {
    (seconds / dt).round() as usize
}

impl UflsOptConfig {
    /// Defaults at another optimization step, with deadband and delay
    /// rescaled to keep 200 ms and 100 ms.
    pub fn with_dt(dt_opt: f64) -> Self {
        UflsOptConfig {
            dt_opt,
            deadband_steps: steps_for(0.2, dt_opt),
            delay_steps: steps_for(0.1, dt_opt),
            ..Default::default()
        }
    }

    /// Horizon length in steps.
    pub fn k(&self) -> usize {
        (self.horizon_s / self.dt_opt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |what: &str| Err(OptError::Config(what.to_string()));
        if self.n_stages == 0 {
            return bad("n_stages must be at least 1");
        }
        if !(self.dt_opt > 0.0) || !(self.horizon_s > 0.0) || self.k() == 0 {
            return bad("dt_opt and horizon_s must give at least one step");
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max) {
            return bad("need 0 < v_min < v_max");
        }
        if !(self.omega_ss_min_hz < self.omega_ss_max_hz) {
            return bad("settling band is empty");
        }
        if !(self.g_bar >= 0.0) || !(self.omega_sep_hz >= 0.0) || !(self.big_m > 0.0) {
            return bad("g_bar and omega_sep_hz must be non-negative, big_m positive");
        }
        if !(self.omega_shed_min_hz < self.omega_shed_max_hz) {
            return bad("threshold range is empty");
        }
        if self.deadband_steps == 0 {
            return bad("deadband_steps must be at least 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, OptError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| OptError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
