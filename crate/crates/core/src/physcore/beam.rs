use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-pass Gaussian probe beam focused at the centre of a cell.
///
/// All lengths in metres. The waist sits at `z = 0` and the cell spans
/// `[-length/2, length/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Waist radius (1/e^2 intensity) [m].
    pub waist: f64,
    /// Probe wavelength [m].
    pub wavelength: f64,
    /// Cell length along the beam [m].
    pub length: f64,
}

impl BeamGeometry {
    pub fn new(waist: f64, wavelength: f64, length: f64) -> Result<Self> {
        let geom = BeamGeometry {
            waist,
            wavelength,
            length,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("waist", self.waist),
            ("wavelength", self.wavelength),
            ("length", self.length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("beam {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// z_R = pi w0^2 / lambda.
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// Beam radius w(z) = w0 sqrt(1 + (z/z_R)^2).
    pub fn beam_radius(&self, z: f64) -> f64 {
        let r = z / self.rayleigh_range();
        self.waist * (1.0 + r * r).sqrt()
    }

    /// Beam radius at the cell windows, w_e = w(l/2).
    pub fn end_radius(&self) -> f64 {
        self.beam_radius(0.5 * self.length)
    }

    /// Effective probed volume lambda l^2 / (2 arctan(l / 2 z_R)).
    pub fn effective_volume(&self) -> f64 {
        let half_angle = (0.5 * self.length / self.rayleigh_range()).atan();
        self.wavelength * self.length * self.length / (2.0 * half_angle)
    }

    /// Far-field divergence NA = lambda / (pi w0).
    pub fn numerical_aperture(&self) -> f64 {
        self.wavelength / (PI * self.waist)
    }

    /// Fractional error scale of the closed-form correlation, (NA)^2 / 16.
    pub fn na_correction(&self) -> f64 {
        let na = self.numerical_aperture();
        na * na / 16.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom(w0: f64) -> BeamGeometry {
        BeamGeometry::new(w0, 795e-9, 15e-3).unwrap()
    }

    #[test]
    fn rayleigh_range_examples() {
        // pi w0^2 / lambda evaluated by hand
        assert_relative_eq!(geom(2e-6).rayleigh_range(), 1.580_675_549e-5, max_relative = 1e-9);
        assert_relative_eq!(geom(50e-6).rayleigh_range(), 9.879_222_181e-3, max_relative = 1e-9);
    }

    #[test]
    fn radius_at_waist_and_rayleigh_range() {
        let g = geom(2e-6);
        assert_eq!(g.beam_radius(0.0), g.waist);
        assert_relative_eq!(
            g.beam_radius(g.rayleigh_range()),
            g.waist * 2f64.sqrt(),
            max_relative = 1e-15
        );
        assert!(g.end_radius() >= g.waist);
        assert_relative_eq!(g.end_radius(), 0.948_963_456e-3, max_relative = 1e-9);
    }

    #[test]
    fn effective_volume_example() {
        let v = geom(50e-6).effective_volume();
        // lambda l^2 / (2 atan(l / 2 z_R)) with z_R = 9.879 mm
        assert_relative_eq!(v, 1.377_352_582e-10, max_relative = 1e-9);
    }

    #[test]
    fn effective_volume_collimated_limit() {
        // z_R / l = 1e4: V_eff approaches the cylinder pi w0^2 l
        let w0 = 50e-6;
        let l = 1e-3;
        let lambda = PI * w0 * w0 / (1e4 * l);
        let g = BeamGeometry::new(w0, lambda, l).unwrap();
        let ratio = g.effective_volume() / (PI * w0 * w0 * l);
        assert!((ratio - 1.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn effective_volume_short_cell() {
        let w0 = 2e-6;
        let g = BeamGeometry::new(w0, 795e-9, 1e-9).unwrap();
        assert_relative_eq!(g.effective_volume() / g.length, PI * w0 * w0, max_relative = 1e-8);
    }

    #[test]
    fn na_correction_focused() {
        assert_relative_eq!(geom(2e-6).na_correction(), 1.0006e-3, max_relative = 1e-4);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(BeamGeometry::new(0.0, 795e-9, 1e-2).is_err());
        assert!(BeamGeometry::new(1e-6, -1.0, 1e-2).is_err());
        assert!(BeamGeometry::new(1e-6, 795e-9, f64::NAN).is_err());
    }

    proptest::proptest! {
        #[test]
        fn radius_even_and_monotone(w0 in 1e-6f64..1e-3, z in 0.0f64..0.05, dz in 1e-6f64..0.01) {
            let g = BeamGeometry::new(w0, 795e-9, 0.015).unwrap();
            proptest::prop_assert_eq!(g.beam_radius(z), g.beam_radius(-z));
            proptest::prop_assert!(g.beam_radius(z + dz) >= g.beam_radius(z));
        }
    }
}
