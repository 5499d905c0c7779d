//! Model parameters.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of the driven, squeezed-decay collective spin model.
///
/// `gamma` fixes the unit of time and is kept explicit so that exported data
/// carries its scale; everything in the library is linear in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of two-level emitters N; the collective spin is J = N/2.
    pub n_spins: usize,
    /// Coherent drive amplitude Omega (units of gamma).
    pub omega: f64,
    /// Squeezing angle theta in [0, pi/2].
    pub theta: f64,
    /// Collective decay scale Gamma > 0.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(n_spins: usize, omega: f64, theta: f64, gamma: f64) -> Result<Self> {
        let p = Self { n_spins, omega, theta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::InvalidParameter("n_spins must be >= 1".into()));
        }
        if !(self.theta >= 0.0 && self.theta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} outside [0, pi/2]",
                self.theta
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {} must be > 0", self.gamma)));
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidParameter("omega must be finite".into()));
        }
        Ok(())
    }

    /// Total spin J = N/2.
    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// Hilbert-space dimension N + 1 of the symmetric multiplet.
    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Downward rate Gamma_- = Gamma cos^2(theta).
    pub fn gamma_minus(&self) -> f64 {
        self.gamma * self.theta.cos().powi(2)
    }

    /// Upward rate Gamma_+ = Gamma sin^2(theta).
    pub fn gamma_plus(&self) -> f64 {
        self.gamma * self.theta.sin().powi(2)
    }

    /// Cross rate chi = Gamma sin(theta) cos(theta) = sqrt(Gamma_- Gamma_+).
    pub fn chi(&self) -> f64 {
        self.gamma * self.theta.sin() * self.theta.cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_domains() {
        assert!(ModelParams::new(0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(4, 0.0, -0.1, 1.0).is_err());
        assert!(ModelParams::new(4, 0.0, 1.6, 1.0).is_err());
        assert!(ModelParams::new(4, 0.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(4, f64::NAN, 0.3, 1.0).is_err());
        assert!(ModelParams::new(4, 0.5, 0.3, 1.0).is_ok());
    }

    #[test]
    fn derived_rates() {
        let p = ModelParams::new(10, 0.8, std::f64::consts::FRAC_PI_4, 1.0).unwrap();
        assert!((p.j() - 5.0).abs() < 1e-15);
        assert_eq!(p.dim(), 11);
        assert!((p.gamma_minus() - 0.5).abs() < 1e-15);
        assert!((p.gamma_plus() - 0.5).abs() < 1e-15);
        assert!((p.chi() - 0.5).abs() < 1e-15);
        // rate identity chi^2 = Gamma_- Gamma_+ holds at any angle
        let q = ModelParams::new(7, 0.1, 0.31, 2.3).unwrap();
        assert!((q.chi().powi(2) - q.gamma_minus() * q.gamma_plus()).abs() < 1e-14);
    }
}
