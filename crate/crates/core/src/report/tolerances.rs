//! Acceptance tolerances, overridable from a TOML file of `name = value`
//! pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute, per Taylor coefficient (5 decimals).
    pub taylor: f64,
    pub theta_extrema: f64,
    pub theta0: f64,
    pub moments: f64,
    /// Relative, per ratio.
    pub ordered_mc: f64,
    pub composition: f64,
    pub disordered_mc: f64,
    pub convergence_mc: f64,
    /// Absolute, per ratio (4 decimals).
    pub inhom_table: f64,
    pub inhom_mc: f64,
    pub approximation: f64,
    pub approximation_slope: f64,
    pub density_mass: f64,
    pub density_moment: f64,
    pub density_origin: f64,
    pub rho_via_g: f64,
    pub sigma_log_imag: f64,
    pub sigma_other: f64,
    pub sigma_periodicity: f64,
    pub b_residual: f64,
    pub sigma_theta0: f64,
    pub functional: f64,
    /// Standard errors allowed between simulation and enumeration.
    pub oracle_sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            taylor: 5e-6,
            theta_extrema: 2e-8,
            theta0: 1e-6,
            moments: 1e-12,
            ordered_mc: 0.01,
            composition: 1e-12,
            disordered_mc: 0.02,
            convergence_mc: 0.05,
            inhom_table: 5e-5,
            inhom_mc: 0.05,
            approximation: 0.063,
            approximation_slope: 5e-4,
            density_mass: 1e-2,
            density_moment: 1e-2,
            density_origin: 2e-3,
            rho_via_g: 1e-3,
            sigma_log_imag: 1e-5,
            sigma_other: 2e-4,
            sigma_periodicity: 2e-4,
            b_residual: 1e-6,
            sigma_theta0: 1e-5,
            functional: 1e-9,
            oracle_sigmas: 3.0,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let value = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        for (name, v) in value.as_object().into_iter().flatten() {
            match v.as_f64() {
                Some(x) if x.is_finite() && x > 0.0 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "tolerance '{name}' must be a positive finite number, got {v}"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Parses a tolerance file. Missing entries keep their defaults.
pub fn parse_tolerances(text: &str) -> Result<Tolerances> {
    let t: Tolerances =
        toml::from_str(text).map_err(|e| Error::Config(format!("tolerance file: {e}")))?;
    t.validate()?;
    Ok(t)
}
