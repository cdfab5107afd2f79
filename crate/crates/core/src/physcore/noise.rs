use serde::{Deserialize, Serialize};

use super::beam::BeamGeometry;
use super::spin::{sz2_unpolarized, SpinSystem};
use crate::constants::{CLASSICAL_ELECTRON_RADIUS, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Probe laser frequency [Hz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalProbe {
    pub frequency: f64,
}

/// Dispersive profile (nu - nu_F) / ((nu - nu_F)^2 + Gamma^2) [1/Hz].
pub fn dispersion_factor(nu: f64, nu_f: f64, gamma: f64) -> f64 {
    let d = nu - nu_f;
    d / (d * d + gamma * gamma)
}

/// N_eff = n V_eff.
pub fn effective_atom_number(density: f64, effective_volume: f64) -> f64 {
    density * effective_volume
}

/// Integrated rotation noise of one isotope together with the quantities it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// <phi^2> [rad^2].
    pub variance: f64,
    /// V_eff [m^3].
    pub effective_volume: f64,
    /// N_eff.
    pub effective_atoms: f64,
}

/// Total rotation-angle noise power <phi^2> of one isotope [rad^2].
///
/// Each hyperfine level contributes `(c r_e f_osc n l D(nu - nu_F))^2 <s_z^2>_F / N_eff`
/// with `n` the isotope's partial density.
pub fn rotation_variance(
    spin: &SpinSystem,
    geom: &BeamGeometry,
    probe: &OpticalProbe,
) -> Result<NoiseBudget> {
    spin.validate()?;
    geom.validate()?;
    let f_osc = spin
        .oscillator_strength
        .ok_or_else(|| Error::config(format!("{}: oscillator strength is required", spin.label)))?;
    let gamma = spin
        .optical_half_width
        .ok_or_else(|| Error::config(format!("{}: optical half-width is required", spin.label)))?;
    if spin.lines.is_empty() {
        return Err(Error::config(format!("{}: no hyperfine lines given", spin.label)));
    }
    if !probe.frequency.is_finite() {
        return Err(Error::domain("probe frequency must be finite"));
    }
    let n = spin.partial_density();
    let v_eff = geom.effective_volume();
    let n_eff = effective_atom_number(n, v_eff);
    let prefactor = SPEED_OF_LIGHT * CLASSICAL_ELECTRON_RADIUS * f_osc * n * geom.length;
    let mut variance = 0.0;
    for line in &spin.lines {
        let amp = prefactor * dispersion_factor(probe.frequency, line.resonance, gamma);
        variance += amp * amp * sz2_unpolarized(spin.nuclear_spin, line.f)? / n_eff;
    }
    Ok(NoiseBudget {
        variance,
        effective_volume: v_eff,
        effective_atoms: n_eff,
    })
}
