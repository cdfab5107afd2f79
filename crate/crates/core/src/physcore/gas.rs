use serde::{Deserialize, Serialize};

use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};

/// Measured diffusion constant and the conditions it was measured at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionDatum {
    /// D0 [m^2/s].
    pub coefficient: f64,
    /// p0 [Pa].
    pub pressure: f64,
    /// T0 [K].
    pub temperature: f64,
}

/// Buffer-gas state seen by the alkali atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasConditions {
    /// Buffer-gas pressure [Pa].
    pub pressure: f64,
    /// Cell temperature [K].
    pub temperature: f64,
    pub datum: DiffusionDatum,
    /// Velocity-changing collision cross-section [m^2].
    pub collision_cross_section: Option<f64>,
}

/// Transport regime implied by the mean free path relative to the waist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionRegime {
    /// l_f < w0 / 2.
    Diffusive,
    /// w0 / 2 <= l_f < w0.
    Marginal,
    /// l_f >= w0: the diffusion model does not apply.
    Ballistic,
}

impl DiffusionRegime {
    pub fn classify(mean_free_path: f64, waist: f64) -> Self {
        if mean_free_path < 0.5 * waist {
            DiffusionRegime::Diffusive
        } else if mean_free_path < waist {
            DiffusionRegime::Marginal
        } else {
            DiffusionRegime::Ballistic
        }
    }

    pub fn is_diffusive(self) -> bool {
        self == DiffusionRegime::Diffusive
    }
}

impl GasConditions {
    fn check_state(&self) -> Result<()> {
        if !(self.pressure.is_finite() && self.pressure > 0.0) {
            return Err(Error::domain(format!(
                "buffer-gas pressure must be positive, got {} Pa",
                self.pressure
            )));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::domain(format!(
                "temperature must be positive, got {} K",
                self.temperature
            )));
        }
        let d = &self.datum;
        if !(d.coefficient > 0.0 && d.pressure > 0.0 && d.temperature > 0.0) {
            return Err(Error::domain("diffusion datum entries must be positive"));
        }
        Ok(())
    }

    /// D = D0 (p0/p) (T/T0)^(3/2) [m^2/s].
    pub fn diffusion_coefficient(&self) -> Result<f64> {
        self.check_state()?;
        let d = &self.datum;
        Ok(d.coefficient * (d.pressure / self.pressure) * (self.temperature / d.temperature).powf(1.5))
    }

    /// Ideal-gas buffer density p / (k_B T) [m^-3].
    pub fn buffer_gas_density(&self) -> Result<f64> {
        self.check_state()?;
        Ok(self.pressure / (BOLTZMANN * self.temperature))
    }

    /// Mean free path 1 / (sigma n_gas) [m].
    pub fn mean_free_path(&self) -> Result<f64> {
        let sigma = self
            .collision_cross_section
            .ok_or_else(|| Error::config("collision cross-section is required for the mean free path"))?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("cross-section must be positive, got {sigma}")));
        }
        Ok(1.0 / (sigma * self.buffer_gas_density()?))
    }
}
