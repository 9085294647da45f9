use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of the prox-linear Dinkelbach solver and its inner ADMM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlpaConfig {
    /// Proximal weight β of the outer subproblem (initial value when adaptive).
    pub beta_prox: f64,
    /// Initial ADMM penalty ρ.
    pub rho0: f64,
    /// Per-iteration continuation factor for ρ.
    pub rho_growth: f64,
    pub rho_max: f64,
    pub outer_max: usize,
    pub outer_tol: f64,
    pub inner_max: usize,
    pub inner_tol: f64,
    /// Double β and re-solve whenever a step would increase the ratio.
    pub adaptive_beta: bool,
    /// Ceiling for adaptive β; past it the step is rejected.
    pub beta_max: f64,
    /// Iteration budget of the ℓ1 baseline ADMM.
    pub baseline_max: usize,
    /// Residual tolerance of the ℓ1 baseline ADMM.
    pub baseline_tol: f64,
    /// Wall-clock budget for one solve, in seconds.
    pub time_limit_secs: Option<f64>,
}

impl Default for DlpaConfig {
    fn default() -> Self {
        Self {
            beta_prox: 1.0,
            rho0: 1.0,
            rho_growth: 1.05,
            rho_max: 1e4,
            outer_max: 200,
            outer_tol: 1e-8,
            inner_max: 2000,
            inner_tol: 1e-8,
            adaptive_beta: true,
            beta_max: 1e12,
            baseline_max: 20000,
            baseline_tol: 1e-5,
            time_limit_secs: None,
        }
    }
}

impl DlpaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_prox", self.beta_prox),
            ("rho0", self.rho0),
            ("rho_max", self.rho_max),
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("beta_max", self.beta_max),
            ("baseline_tol", self.baseline_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.rho_growth >= 1.0) || !self.rho_growth.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho_growth must be >= 1, got {}",
                self.rho_growth
            )));
        }
        if self.outer_max == 0 || self.inner_max == 0 || self.baseline_max == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be positive".into(),
            ));
        }
        if let Some(t) = self.time_limit_secs {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "time limit must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}
