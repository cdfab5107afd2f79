//! Diffusion component of the spin-noise time-correlation function for a
//! Gaussian probe beam, plus the full correlation with Larmor precession
//! and transverse decay.
//!
//! [`cd_numeric`] integrates the intensity-weighted diffusion propagator over
//! the cell directly and serves as the in-repo oracle for the closed form
//! [`cd_analytic`]. The two limiting shapes [`cd_collimated`] and
//! [`cd_focused`] hold for `z_R >> l` and `z_R << l` respectively.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid;
use crate::physcore::{BeamGeometry, DiffusionRegime, GasConditions};
use crate::quad::{self, Tolerance};

/// Gaussian-kernel truncation of the separation integral, in units of sqrt(4 D tau).
const KERNEL_WIDTHS: f64 = 8.0;

/// `z_R < l * FOCUSED_RATIO` classifies a beam as tightly focused.
pub const FOCUSED_RATIO: f64 = 0.1;
/// `z_R > l * COLLIMATED_RATIO` classifies a beam as collimated.
pub const COLLIMATED_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    NumericIntegral,
    Analytic,
    CollimatedLimit,
    FocusedLimit,
}

/// A value from [`cd_numeric`] together with its quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureValue {
    pub value: f64,
    pub error: f64,
}

/// Double-integral evaluation of C_d(tau) over the cell volume.
///
/// After the substitution `u = z1 - z2`, `v = (z1 + z2)/2` the Gaussian kernel
/// only depends on `u`; both axes are folded onto their positive halves by
/// symmetry and integrated adaptively. `tau = 0` returns exactly 1.
pub fn cd_numeric(geom: &BeamGeometry, diffusion: f64, tau: f64, tol: &Tolerance) -> Result<QuadratureValue> {
    geom.validate()?;
    if !(diffusion > 0.0) {
        return Err(Error::domain(format!("diffusion coefficient must be positive, got {diffusion}")));
    }
    if !(tau >= 0.0) {
        return Err(Error::domain(format!("delay must be non-negative, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(QuadratureValue { value: 1.0, error: 0.0 });
    }

    let l = geom.length;
    let w0_sq = geom.waist * geom.waist;
    let zr_sq = geom.rayleigh_range().powi(2);
    let spread = 8.0 * diffusion * tau;
    let width = (4.0 * diffusion * tau).sqrt();
    let scale = 4.0 * geom.effective_volume() / (l * l * PI.powf(1.5));
    let x_max = (l / width).min(KERNEL_WIDTHS);
    let w_sq = |z: f64| w0_sq * (1.0 + z * z / zr_sq);

    let mut inner_err_max: f64 = 0.0;
    let mut inner_failure: Option<Error> = None;
    let outer = quad::integrate(
        |x| {
            let u = width * x;
            let half_span = 0.5 * (l - u);
            if half_span <= 0.0 {
                return 0.0;
            }
            let half_u = 0.5 * u;
            let inner = quad::integrate(
                |v| 2.0 * scale / (w_sq(v + half_u) + w_sq(v - half_u) + spread),
                0.0,
                half_span,
                tol,
            );
            match inner {
                Ok(est) => {
                    inner_err_max = inner_err_max.max(est.error);
                    (-x * x).exp() * est.value
                }
                Err(e) => {
                    inner_failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        x_max,
        tol,
    )?;
    if let Some(e) = inner_failure {
        return Err(e);
    }
    // each inner error enters with weight exp(-x^2), whose integral is at most sqrt(pi)/2
    let error = outer.error + inner_err_max * PI.sqrt() / 2.0;
    Ok(QuadratureValue { value: outer.value, error })
}

/// Closed-form C_d(tau) for a Gaussian beam, accurate to about (NA)^2/16.
pub fn cd_analytic(geom: &BeamGeometry, diffusion: f64, tau: f64) -> f64 {
    let w0 = geom.waist;
    let zr = geom.rayleigh_range();
    let q = (4.0 * tau.abs() * diffusion + w0 * w0).sqrt();
    let ratio = (geom.length * w0 / (2.0 * zr * q)).atan() / (geom.length / (2.0 * zr)).atan();
    w0 / q * ratio
}

/// Collimated-beam limit 1 / (1 + 4 tau D / w0^2).
pub fn cd_collimated(waist: f64, diffusion: f64, tau: f64) -> f64 {
    1.0 / (1.0 + 4.0 * tau.abs() * diffusion / (waist * waist))
}

/// Tightly-focused limit 1 / sqrt(1 + 4 tau D / w0^2).
pub fn cd_focused(waist: f64, diffusion: f64, tau: f64) -> f64 {
    cd_collimated(waist, diffusion, tau).sqrt()
}

/// C(tau) = C_d(tau) cos(2 pi f_L tau) exp(-tau / T2).
///
/// `t2 = f64::INFINITY` switches the decay off.
pub fn full_correlation(cd_values: &[f64], larmor_frequency: f64, t2: f64, tau: &[f64]) -> Result<Vec<f64>> {
    if cd_values.len() != tau.len() {
        return Err(Error::domain(format!(
            "correlation values ({}) and delay grid ({}) differ in length",
            cd_values.len(),
            tau.len()
        )));
    }
    if !(t2 > 0.0) {
        return Err(Error::domain(format!("T2 must be positive, got {t2}")));
    }
    Ok(cd_values
        .iter()
        .zip(tau)
        .map(|(&c, &t)| {
            let t = t.abs();
            c * (2.0 * PI * larmor_frequency * t).cos() * (-t / t2).exp()
        })
        .collect())
}

/// Geometry and dynamics a correlation curve was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMeta {
    pub geometry: BeamGeometry,
    pub diffusion: f64,
    pub larmor_frequency: Option<f64>,
    pub t2: Option<f64>,
}

/// Sampled correlation function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
    pub model: CorrelationModel,
    pub meta: CorrelationMeta,
    /// Per-point quadrature error bounds (numeric model only).
    pub error_bounds: Option<Vec<f64>>,
}

impl CorrelationCurve {
    /// Evaluates the diffusion component on `tau` with the given model.
    pub fn diffusion(
        model: CorrelationModel,
        geom: &BeamGeometry,
        diffusion: f64,
        tau: &[f64],
        tol: &Tolerance,
    ) -> Result<Self> {
        geom.validate()?;
        if !(diffusion > 0.0) {
            return Err(Error::domain(format!("diffusion coefficient must be positive, got {diffusion}")));
        }
        if !grid::is_strictly_increasing(tau) || tau.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::config("delay grid must be non-negative and strictly increasing"));
        }
        let mut error_bounds = None;
        let values = match model {
            CorrelationModel::NumericIntegral => {
                let (vals, errs): (Vec<f64>, Vec<f64>) = tau
                    .iter()
                    .map(|&t| cd_numeric(geom, diffusion, t, tol).map(|q| (q.value, q.error)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                error_bounds = Some(errs);
                vals
            }
            CorrelationModel::Analytic => tau.iter().map(|&t| cd_analytic(geom, diffusion, t)).collect(),
            CorrelationModel::CollimatedLimit => {
                tau.iter().map(|&t| cd_collimated(geom.waist, diffusion, t)).collect()
            }
            CorrelationModel::FocusedLimit => tau.iter().map(|&t| cd_focused(geom.waist, diffusion, t)).collect(),
        };
        Ok(CorrelationCurve {
            tau: tau.to_vec(),
            values,
            model,
            meta: CorrelationMeta {
                geometry: *geom,
                diffusion,
                larmor_frequency: None,
                t2: None,
            },
            error_bounds,
        })
    }

    /// Applies precession and transverse decay to a diffusion-only curve.
    pub fn with_precession(mut self, larmor_frequency: f64, t2: f64) -> Result<Self> {
        if self.meta.larmor_frequency.is_some() || self.meta.t2.is_some() {
            return Err(Error::domain("curve already includes precession"));
        }
        self.values = full_correlation(&self.values, larmor_frequency, t2, &self.tau)?;
        self.meta.larmor_frequency = Some(larmor_frequency);
        self.meta.t2 = Some(t2);
        Ok(self)
    }

    pub fn is_full(&self) -> bool {
        self.meta.t2.is_some()
    }
}

/// Time-scale region a delay falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    /// tau < w0^2 / 4D.
    Waist,
    /// w0^2 / 4D <= tau < w_e^2 / 4D.
    PowerLaw,
    /// tau >= w_e^2 / 4D.
    Ends,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::Waist => "waist",
            RegimeLabel::PowerLaw => "power_law",
            RegimeLabel::Ends => "ends",
        }
    }
}

/// Diffusion time scales and validity flags of a geometry / gas pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub diffusion: f64,
    pub rayleigh_range: f64,
    pub end_radius: f64,
    /// w0^2 / 4D [s].
    pub tau_wa: f64,
    /// w_e^2 / 4D [s].
    pub tau_we: f64,
    /// (NA)^2 / 16.
    pub na_correction: f64,
    pub mean_free_path: Option<f64>,
    pub diffusion_regime: Option<DiffusionRegime>,
    pub diffusive_flag: bool,
    pub focused_flag: bool,
    pub collimated_flag: bool,
    pub warnings: Vec<String>,
}

impl RegimeReport {
    pub fn label(&self, tau: f64) -> RegimeLabel {
        if tau < self.tau_wa {
            RegimeLabel::Waist
        } else if tau < self.tau_we {
            RegimeLabel::PowerLaw
        } else {
            RegimeLabel::Ends
        }
    }
}

/// Classifies a geometry and gas. `cell_radius`, when known, is checked
/// against the beam radius at the windows.
pub fn regime_report(geom: &BeamGeometry, gas: &GasConditions, cell_radius: Option<f64>) -> Result<RegimeReport> {
    geom.validate()?;
    let diffusion = gas.diffusion_coefficient()?;
    let zr = geom.rayleigh_range();
    let w_e = geom.end_radius();
    let mut warnings = Vec::new();

    let (mean_free_path, diffusion_regime) = match gas.collision_cross_section {
        Some(_) => {
            let lf = gas.mean_free_path()?;
            let regime = DiffusionRegime::classify(lf, geom.waist);
            if !regime.is_diffusive() {
                warnings.push(format!(
                    "mean free path {lf:.3e} m is not well below the waist {:.3e} m ({regime:?})",
                    geom.waist
                ));
            }
            (Some(lf), Some(regime))
        }
        None => {
            warnings.push("no collision cross-section given; diffusive regime not checked".into());
            (None, None)
        }
    };
    if let Some(r) = cell_radius {
        if w_e > r {
            warnings.push(format!("beam radius at the windows {w_e:.3e} m exceeds the cell radius {r:.3e} m"));
        }
    }
    let na_correction = geom.na_correction();
    if na_correction > 0.01 {
        warnings.push(format!("(NA)^2/16 = {na_correction:.3e}: closed form loses accuracy"));
    }

    Ok(RegimeReport {
        diffusion,
        rayleigh_range: zr,
        end_radius: w_e,
        tau_wa: geom.waist * geom.waist / (4.0 * diffusion),
        tau_we: w_e * w_e / (4.0 * diffusion),
        na_correction,
        mean_free_path,
        diffusion_regime,
        diffusive_flag: diffusion_regime.is_some_and(DiffusionRegime::is_diffusive),
        focused_flag: zr < FOCUSED_RATIO * geom.length,
        collimated_flag: zr > COLLIMATED_RATIO * geom.length,
        warnings,
    })
}
