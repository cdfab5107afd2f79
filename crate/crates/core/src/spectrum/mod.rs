//! Spin-noise power spectra.
//!
//! Spectra are two-sided densities in rad^2/Hz unless tagged otherwise:
//! `S(f) = <phi^2> int C(|tau|) e^{-2 pi i f tau} dtau`, so with the
//! precession included in `C` there is one peak at `+f_L` and its mirror at
//! `-f_L`, each carrying half of `<phi^2>`.
//!
//! The closed-form collimated and focused lineshapes are quoted in the
//! positive-frequency (folded) normalisation around `+f_L` and are tagged
//! [`Sidedness::SinglePeak`]; [`analytic_spectrum`] also produces properly
//! two-sided or one-sided versions with the mirror peak included.

mod analytic;
mod metrology;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analytic::{
    analytic_spectrum, collimated_density, focused_density, focused_validity, FOCUSED_VALIDITY_LIMIT, lorentzian_reference,
    spectrum_collimated, spectrum_focused, AnalyticShape, FocusedValidity, LineParams,
};
pub use metrology::{fwhm, line_metrics, LineMetrics};
pub use transform::{
    cosine_transform, cosine_transform_direct, default_frequency_grid, default_transform_step, full_band_spectrum,
    metrology_grid, parseval, spectrum_numeric, ParsevalReport, TransformOptions, MIN_DEFAULT_POINTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumModel {
    NumericWk,
    CollimatedAnalytic,
    FocusedAnalytic,
    Lorentzian,
    Composite,
}

impl SpectrumModel {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumModel::NumericWk => "numeric",
            SpectrumModel::CollimatedAnalytic => "collimated",
            SpectrumModel::FocusedAnalytic => "focused",
            SpectrumModel::Lorentzian => "lorentzian",
            SpectrumModel::Composite => "composite",
        }
    }
}

/// Normalisation convention of a sampled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// Density over all f; integrates to <phi^2> C(0).
    TwoSided,
    /// Doubled for f > 0, zero for f < 0.
    OneSided,
    /// Closed-form line around +f_L in the folded normalisation, mirror omitted.
    SinglePeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    /// Frequencies [Hz], strictly increasing.
    pub f: Vec<f64>,
    /// Power spectral density [rad^2/Hz].
    pub values: Vec<f64>,
    pub model: SpectrumModel,
    pub sidedness: Sidedness,
    /// <phi^2> the curve was scaled with [rad^2].
    pub variance: f64,
    pub warnings: Vec<String>,
}

impl SpectrumCurve {
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.f
            .iter()
            .zip(&self.values)
            .fold(None, |best: Option<(f64, f64)>, (&f, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((f, v)),
            })
    }

    /// Values divided by the maximum (all zeros if the maximum is not positive).
    pub fn peak_normalized(&self) -> Vec<f64> {
        match self.peak() {
            Some((_, p)) if p > 0.0 => self.values.iter().map(|v| v / p).collect(),
            _ => vec![0.0; self.values.len()],
        }
    }

    /// One-sided view of a two-sided spectrum: doubled for f > 0, zero for f < 0.
    pub fn to_one_sided(&self) -> Result<SpectrumCurve> {
        if self.sidedness != Sidedness::TwoSided {
            return Err(Error::config(format!("cannot fold a {:?} spectrum", self.sidedness)));
        }
        let values = self
            .f
            .iter()
            .zip(&self.values)
            .map(|(&f, &v)| if f > 0.0 { 2.0 * v } else if f < 0.0 { 0.0 } else { v })
            .collect();
        Ok(SpectrumCurve {
            values,
            sidedness: Sidedness::OneSided,
            ..self.clone()
        })
    }

    /// Trapezoidal area under the sampled curve.
    pub fn area(&self) -> f64 {
        self.f
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(f, v)| 0.5 * (f[1] - f[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Pointwise sum of spectra sampled on one common grid (e.g. several isotopes).
pub fn composite_spectrum(parts: &[SpectrumCurve]) -> Result<SpectrumCurve> {
    let first = parts
        .first()
        .ok_or_else(|| Error::config("composite spectrum needs at least one component"))?;
    let mut values = first.values.clone();
    let mut warnings = first.warnings.clone();
    let mut variance = first.variance;
    for (k, part) in parts.iter().enumerate().skip(1) {
        if part.f != first.f {
            return Err(Error::GridMismatch(format!("component {k} uses a different frequency grid")));
        }
        if part.sidedness != first.sidedness {
            return Err(Error::GridMismatch(format!(
                "component {k} is {:?}, expected {:?}",
                part.sidedness, first.sidedness
            )));
        }
        for (acc, v) in values.iter_mut().zip(&part.values) {
            *acc += v;
        }
        variance += part.variance;
        warnings.extend(part.warnings.iter().cloned());
    }
    Ok(SpectrumCurve {
        f: first.f.clone(),
        values,
        model: if parts.len() == 1 { first.model } else { SpectrumModel::Composite },
        sidedness: first.sidedness,
        variance,
        warnings,
    })
}
