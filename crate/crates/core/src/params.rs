//! Physical constants of a scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VmfpError};

/// Charge, mass, temperature, relaxation time, vacuum constants and the
/// scaling parameter `eps` of the strongly magnetized regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasmaParams {
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub eps0: f64,
    #[serde(default = "one")]
    pub mu0: f64,
    #[serde(default = "one")]
    pub eps: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PlasmaParams {
    fn default() -> Self {
        Self {
            q: 1.0,
            m: 1.0,
            sigma: 1.0,
            tau: 1.0,
            eps0: 1.0,
            mu0: 1.0,
            eps: 1.0,
        }
    }
}

impl PlasmaParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("q", self.q),
            ("m", self.m),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("eps0", self.eps0),
            ("mu0", self.mu0),
            ("eps", self.eps),
        ];
        for (name, v) in checks {
            if !v.is_finite() || v <= 0.0 {
                return Err(VmfpError::Parameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Collision rate 1/(eps tau) in the scaled equation.
    pub fn collision_rate(&self) -> f64 {
        1.0 / (self.eps * self.tau)
    }

    /// Cyclotron frequency q B / m.
    pub fn cyclotron(&self, b: f64) -> f64 {
        self.q * b / self.m
    }

    pub fn light_speed(&self) -> f64 {
        1.0 / (self.mu0 * self.eps0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive() {
        let mut p = PlasmaParams::default();
        assert!(p.validate().is_ok());
        p.tau = 0.0;
        assert!(matches!(p.validate(), Err(VmfpError::Parameter(_))));
        p.tau = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn toml_defaults_fill_in() {
        let p: PlasmaParams = toml::from_str("eps = 0.25\nsigma = 2.0").unwrap();
        assert_eq!(p.eps, 0.25);
        assert_eq!(p.sigma, 2.0);
        assert_eq!(p.q, 1.0);
    }
}
