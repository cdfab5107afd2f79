use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Sidedness, SpectrumCurve, SpectrumModel};
use crate::error::{Error, Result};
use crate::grid::is_strictly_increasing;
use crate::specfun::exp_scaled_e1;

/// Threshold on the focused-limit validity ratios.
pub const FOCUSED_VALIDITY_LIMIT: f64 = 0.3;

/// Parameters of a single precessing, diffusing line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    /// Beam waist w0 [m].
    pub waist: f64,
    /// Diffusion coefficient [m^2/s].
    pub diffusion: f64,
    /// Transverse relaxation time [s].
    pub t2: f64,
    /// Larmor frequency [Hz].
    pub larmor_frequency: f64,
}

impl LineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("waist", self.waist), ("diffusion", self.diffusion), ("t2", self.t2)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.larmor_frequency.is_finite() {
            return Err(Error::domain("Larmor frequency must be finite"));
        }
        Ok(())
    }

    /// w0^2 / (4 D T2): the transit-to-relaxation ratio.
    pub fn transit_ratio(&self) -> f64 {
        self.waist * self.waist / (4.0 * self.diffusion * self.t2)
    }

    fn with_larmor(&self, larmor_frequency: f64) -> Self {
        LineParams { larmor_frequency, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticShape {
    Collimated,
    Focused,
}

impl AnalyticShape {
    pub fn model(self) -> SpectrumModel {
        match self {
            AnalyticShape::Collimated => SpectrumModel::CollimatedAnalytic,
            AnalyticShape::Focused => SpectrumModel::FocusedAnalytic,
        }
    }

    fn density(self, f: f64, params: &LineParams, variance: f64) -> Result<f64> {
        match self {
            AnalyticShape::Collimated => collimated_density(f, params, variance),
            AnalyticShape::Focused => Ok(focused_density(f, params, variance)),
        }
    }
}

/// Collimated-beam line around +f_L: `<phi^2> (w0^2/2D) Re[e^s E1(s)]` with
/// `s = (w0^2/4D)(1/T2 + 2 pi i (f - f_L))`.
pub fn collimated_density(f: f64, params: &LineParams, variance: f64) -> Result<f64> {
    let scale = params.waist * params.waist / (4.0 * params.diffusion);
    let s = Complex64::new(scale / params.t2, scale * 2.0 * PI * (f - params.larmor_frequency));
    Ok(variance * 2.0 * scale * exp_scaled_e1(s)?.re)
}

/// Focused-beam line around +f_L: `<phi^2> (w0/sqrt D) Re[sqrt(pi) / sqrt(1/T2 + 2 pi i (f - f_L))]`.
pub fn focused_density(f: f64, params: &LineParams, variance: f64) -> f64 {
    let a = Complex64::new(1.0 / params.t2, 2.0 * PI * (f - params.larmor_frequency));
    variance * params.waist / params.diffusion.sqrt() * (PI.sqrt() / a.sqrt()).re
}

/// Validity diagnostics for the focused lineshape on a given grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusedValidity {
    /// w0 / sqrt(D T2).
    pub waist_ratio: f64,
    /// Grid points where w0 sqrt(2 pi |f - f_L| / D) exceeds the limit.
    pub violating_points: usize,
    pub warnings: Vec<String>,
}

pub fn focused_validity(f_grid: &[f64], params: &LineParams) -> FocusedValidity {
    let waist_ratio = params.waist / (params.diffusion * params.t2).sqrt();
    let violating_points = f_grid
        .iter()
        .filter(|&&f| {
            params.waist * (2.0 * PI * (f - params.larmor_frequency).abs() / params.diffusion).sqrt()
                >= FOCUSED_VALIDITY_LIMIT
        })
        .count();
    let mut warnings = Vec::new();
    if waist_ratio >= FOCUSED_VALIDITY_LIMIT {
        warnings.push(format!(
            "focused lineshape outside its validity range: w0/sqrt(D T2) = {waist_ratio:.3} >= {FOCUSED_VALIDITY_LIMIT}"
        ));
    }
    if violating_points > 0 {
        warnings.push(format!(
            "focused lineshape outside its validity range at {violating_points} of {} frequencies (w0 sqrt(2 pi |f - f_L| / D) >= {FOCUSED_VALIDITY_LIMIT})",
            f_grid.len()
        ));
    }
    FocusedValidity {
        waist_ratio,
        violating_points,
        warnings,
    }
}

pub(crate) fn check_frequency_grid(f_grid: &[f64]) -> Result<()> {
    if f_grid.is_empty() {
        return Err(Error::config("frequency grid is empty"));
    }
    if f_grid.iter().any(|f| !f.is_finite()) || !is_strictly_increasing(f_grid) {
        return Err(Error::config("frequency grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// Sample an analytic lineshape in the requested convention.
///
/// * `SinglePeak` evaluates the closed form as quoted (folded, mirror omitted).
/// * `TwoSided` is `[S(f; f_L) + S(f; -f_L)] / 2`, directly comparable with
///   the numeric transform.
/// * `OneSided` doubles the two-sided density for f > 0 and zeroes f < 0.
pub fn analytic_spectrum(
    shape: AnalyticShape,
    f_grid: &[f64],
    params: &LineParams,
    variance: f64,
    sidedness: Sidedness,
) -> Result<SpectrumCurve> {
    params.validate()?;
    check_frequency_grid(f_grid)?;
    let mirror = params.with_larmor(-params.larmor_frequency);
    let values = f_grid
        .iter()
        .map(|&f| {
            let direct = shape.density(f, params, variance)?;
            Ok(match sidedness {
                Sidedness::SinglePeak => direct,
                Sidedness::TwoSided | Sidedness::OneSided => {
                    let two_sided = 0.5 * (direct + shape.density(f, &mirror, variance)?);
                    match sidedness {
                        Sidedness::OneSided if f > 0.0 => 2.0 * two_sided,
                        Sidedness::OneSided if f < 0.0 => 0.0,
                        _ => two_sided,
                    }
                }
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let warnings = match shape {
        AnalyticShape::Focused => focused_validity(f_grid, params).warnings,
        AnalyticShape::Collimated => Vec::new(),
    };
    Ok(SpectrumCurve {
        f: f_grid.to_vec(),
        values,
        model: shape.model(),
        sidedness,
        variance,
        warnings,
    })
}

pub fn spectrum_collimated(f_grid: &[f64], params: &LineParams, variance: f64) -> Result<SpectrumCurve> {
    analytic_spectrum(AnalyticShape::Collimated, f_grid, params, variance, Sidedness::SinglePeak)
}

/// Focused lineshape; validity violations are reported in `warnings`.
pub fn spectrum_focused(f_grid: &[f64], params: &LineParams, variance: f64) -> Result<SpectrumCurve> {
    analytic_spectrum(AnalyticShape::Focused, f_grid, params, variance, Sidedness::SinglePeak)
}

/// Two-sided Lorentzian pair at +-f_L with area `<phi^2>` and peak `<phi^2> T2`.
pub fn lorentzian_reference(f_grid: &[f64], larmor_frequency: f64, t2: f64, variance: f64) -> Result<SpectrumCurve> {
    if !(t2.is_finite() && t2 > 0.0) || !larmor_frequency.is_finite() {
        return Err(Error::domain("Lorentzian needs finite f_L and positive T2"));
    }
    check_frequency_grid(f_grid)?;
    let line = |df: f64| t2 / (1.0 + (2.0 * PI * df * t2).powi(2));
    let values = f_grid
        .iter()
        .map(|&f| variance * (line(f - larmor_frequency) + line(f + larmor_frequency)))
        .collect();
    Ok(SpectrumCurve {
        f: f_grid.to_vec(),
        values,
        model: SpectrumModel::Lorentzian,
        sidedness: Sidedness::TwoSided,
        variance,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::specfun::exp_scaled_e1;
    use crate::spectrum::fwhm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const F_L: f64 = 332e3;

    fn params(waist: f64, diffusion: f64) -> LineParams {
        LineParams {
            waist,
            diffusion,
            t2: 1e-3,
            larmor_frequency: F_L,
        }
    }

    fn symmetric_grid(half: f64, n: usize) -> Vec<f64> {
        linspace(F_L - half, F_L + half, n)
    }

    #[test]
    fn lorentzian_peak_width_area() {
        let t2 = 1e-3;
        let grid = linspace(-2e6, 2e6, 4_000_001);
        let l = lorentzian_reference(&grid, F_L, t2, 2.5).unwrap();
        let (fp, peak) = l.peak().unwrap();
        assert_relative_eq!(fp.abs(), F_L, max_relative = 1e-9);
        assert_relative_eq!(peak, 2.5 * t2, max_relative = 1e-6);
        // A tail beyond distance a from a line centre holds ~ 1/(4 pi^2 T2 a) of the area.
        let tail = |a: f64| 1.0 / (4.0 * PI * PI * t2 * a);
        let missing = 2.0 * (tail(2e6 - F_L) + tail(2e6 + F_L));
        assert_relative_eq!(l.area(), 2.5 * (1.0 - missing), max_relative = 1e-4);
        let local = lorentzian_reference(&symmetric_grid(5e3, 10_001), F_L, t2, 1.0).unwrap();
        let w = fwhm(&local).unwrap();
        assert!((w - 1.0 / (PI * t2)).abs() <= 1.0, "FWHM {w}");
    }

    #[test]
    fn collimated_peak_matches_definition() {
        let p = params(1e-3, 1e-4);
        let x = p.transit_ratio();
        let s = spectrum_collimated(&[F_L], &p, 0.7).unwrap();
        let expected = 0.7 * p.waist.powi(2) / (2.0 * p.diffusion) * exp_scaled_e1(Complex64::new(x, 0.0)).unwrap().re;
        assert_relative_eq!(s.values[0], expected, max_relative = 1e-14);
    }

    #[test]
    fn collimated_symmetric_about_larmor() {
        let p = params(50e-6, 2.865e-5);
        for k in 1..50 {
            let d = 37.0 * k as f64;
            let hi = collimated_density(F_L + d, &p, 1.0).unwrap();
            let lo = collimated_density(F_L - d, &p, 1.0).unwrap();
            assert_eq!(hi, lo);
        }
    }

    #[test]
    fn collimated_lorentzian_limit() {
        // x = 100 and x = 1e4 at T2 = 1 ms.
        let t2 = 1e-3;
        let target = 1.0 / (PI * t2);
        for (x, tol) in [(100.0, 0.05), (1e4, 0.005)] {
            let w0 = 1e-3;
            let d = w0 * w0 / (4.0 * x * t2);
            let s = spectrum_collimated(&symmetric_grid(4e3, 16_001), &params(w0, d), 1.0).unwrap();
            let w = fwhm(&s).unwrap();
            assert!((w / target - 1.0).abs() < tol, "x = {x}: {w} vs {target}");
        }
    }

    #[test]
    fn collimated_narrows_with_pressure() {
        // D from the 85Rb datum at 100 C for 56.5, 200, 500, 820 Torr.
        let d_at = |p_torr: f64| 0.2 * (760.0 / p_torr) * (373.15f64 / 273.15).powf(1.5) * 1e-4;
        let grid = symmetric_grid(60e3, 24_001);
        let widths: Vec<f64> = [56.5, 200.0, 500.0, 820.0]
            .iter()
            .map(|&p| fwhm(&spectrum_collimated(&grid, &params(50e-6, d_at(p)), 1.0).unwrap()).unwrap())
            .collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
    }

    #[test]
    fn focused_peak_and_wing_slope() {
        let p = params(2e-6, 2.865e-5);
        let s = spectrum_focused(&[F_L], &p, 1.3).unwrap();
        assert_relative_eq!(
            s.values[0],
            1.3 * p.waist * (PI * p.t2 / p.diffusion).sqrt(),
            max_relative = 1e-14
        );
        let (d1, d2) = (2e5, 2e6);
        let s1 = focused_density(F_L + d1, &p, 1.0);
        let s2 = focused_density(F_L + d2, &p, 1.0);
        let slope = (s2 / s1).ln() / (d2 / d1).ln();
        assert!((slope + 0.5).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn focused_shape_is_diffusion_invariant() {
        let grid = symmetric_grid(50e3, 4097);
        let a = spectrum_focused(&grid, &params(2e-6, 1.791e-5), 1.0).unwrap();
        let b = spectrum_focused(&grid, &params(2e-6, 16.0 * 1.791e-5), 1.0).unwrap();
        for (x, y) in a.peak_normalized().iter().zip(b.peak_normalized()) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(*x, 4.0 * y, max_relative = 1e-13);
        }
        let (wa, wb) = (fwhm(&a).unwrap(), fwhm(&b).unwrap());
        assert!((wa - wb).abs() / wa < 0.01);
    }

    #[test]
    fn focused_validity_flags() {
        let narrow = symmetric_grid(1e3, 11);
        let ok = focused_validity(&narrow, &params(2e-6, 2.865e-5));
        assert!(ok.waist_ratio < FOCUSED_VALIDITY_LIMIT && ok.violating_points == 0);
        assert!(spectrum_focused(&narrow, &params(2e-6, 2.865e-5), 1.0).unwrap().warnings.is_empty());
        let bad = spectrum_focused(&symmetric_grid(2e6, 11), &params(50e-6, 1.791e-5), 1.0).unwrap();
        assert_eq!(bad.warnings.len(), 2);
    }

    #[test]
    fn two_sided_variant_halves_and_mirrors() {
        let p = params(50e-6, 2.865e-5);
        let grid = linspace(-1e6, 1e6, 2001);
        let single = analytic_spectrum(AnalyticShape::Collimated, &grid, &p, 1.0, Sidedness::SinglePeak).unwrap();
        let two = analytic_spectrum(AnalyticShape::Collimated, &grid, &p, 1.0, Sidedness::TwoSided).unwrap();
        let one = analytic_spectrum(AnalyticShape::Collimated, &grid, &p, 1.0, Sidedness::OneSided).unwrap();
        let n = grid.len();
        for k in 0..n {
            assert_relative_eq!(two.values[k], two.values[n - 1 - k], max_relative = 1e-12);
            if grid[k] > 0.0 {
                assert_relative_eq!(one.values[k], 2.0 * two.values[k], max_relative = 1e-15);
            } else if grid[k] < 0.0 {
                assert_eq!(one.values[k], 0.0);
            }
        }
        let ip = grid.iter().position(|&f| f >= F_L).unwrap();
        assert!((two.values[ip] / single.values[ip] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(spectrum_collimated(&[2.0, 1.0], &params(1e-5, 1e-5), 1.0).is_err());
        assert!(spectrum_collimated(&[], &params(1e-5, 1e-5), 1.0).is_err());
        assert!(spectrum_focused(&[1.0], &params(-1e-5, 1e-5), 1.0).is_err());
        assert!(lorentzian_reference(&[1.0], F_L, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn analytic_lines_are_even_about_larmor(delta in 1.0f64..1e6, w0 in 1e-6f64..1e-3, d in 1e-6f64..1e-3) {
            let p = params(w0, d);
            let c = (collimated_density(F_L + delta, &p, 1.0).unwrap(), collimated_density(F_L - delta, &p, 1.0).unwrap());
            prop_assert!((c.0 - c.1).abs() <= 1e-9 * c.0);
            let f = (focused_density(F_L + delta, &p, 1.0), focused_density(F_L - delta, &p, 1.0));
            prop_assert!((f.0 - f.1).abs() <= 1e-9 * f.0);
            prop_assert!(c.0 > 0.0);
        }
    }
}
