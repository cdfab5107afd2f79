//! Fully resolved simulation request (SI units throughout).

use std::f64::consts::PI;

use serde::Serialize;
use spinoise_core::corrfn::{regime_report, RegimeReport, FOCUSED_RATIO};
use spinoise_core::grid::{linspace, logspace, logspace_per_decade};
use spinoise_core::physcore::{
    rotation_variance, BeamGeometry, DiffusionDatum, GasConditions, HalfInt, HyperfineLine, NoiseBudget, OpticalProbe,
    SpinSystem,
};
use spinoise_core::quad::Tolerance;
use spinoise_core::spectrum::{default_frequency_grid, Sidedness, MIN_DEFAULT_POINTS};

use crate::config::{RawConfig, Section};
use crate::error::{CliError, Result};
use crate::units::Quantity;

/// Model selector shared by the `--model` flag and `[model]` settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Numeric,
    Analytic,
    Collimated,
    Focused,
    Lorentzian,
    All,
}

pub(crate) const MODEL_CHOICES: &[(&str, ModelChoice)] = &[
    ("numeric", ModelChoice::Numeric),
    ("analytic", ModelChoice::Analytic),
    ("collimated", ModelChoice::Collimated),
    ("focused", ModelChoice::Focused),
    ("lorentzian", ModelChoice::Lorentzian),
    ("all", ModelChoice::All),
];

/// Which limiting form accompanies the exact correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitChoice {
    /// Focused when z_R < 0.1 l, collimated otherwise.
    Auto,
    Collimated,
    Focused,
}

/// Diffusion correlation fed into the numeric spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformSource {
    Analytic,
    Collimated,
    Focused,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayGrid {
    Log { min: f64, max: f64, points: usize },
    Linear { min: f64, max: f64, points: usize },
    List { values: Vec<f64> },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyGrid {
    /// Centred on the Larmor frequencies, +-max(10/(2 pi T2), 2 MHz), 4097 points.
    Default,
    Centered { half_width: f64, points: usize },
    Linear { min: f64, max: f64, points: usize },
    List { values: Vec<f64> },
    /// Variance only; no spectrum is sampled.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub tau: DelayGrid,
    pub frequency: FrequencyGrid,
    /// Transform delay step [s]; defaults to min(1/(20 f_max), w0^2/4D).
    pub transform_step: Option<f64>,
    /// Transform delay span [s]; defaults to 10 T2 (largest T2 of all spins).
    pub transform_span: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub correlation: ModelChoice,
    pub spectrum: ModelChoice,
    pub cd_limit: LimitChoice,
    pub transform_source: TransformSource,
    pub sidedness: Sidedness,
    pub quadrature: Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub prefix: String,
    pub normalize: bool,
    pub csv: bool,
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinEntry {
    pub system: SpinSystem,
    /// Explicit <phi^2> [rad^2], bypassing the optical model.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    Absolute { frequency: f64 },
    Detuned { detuning: f64, reference: String, frequency: f64 },
}

impl ProbeSpec {
    pub fn frequency(&self) -> f64 {
        match self {
            ProbeSpec::Absolute { frequency } | ProbeSpec::Detuned { frequency, .. } => *frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub geometry: BeamGeometry,
    pub cell_radius: Option<f64>,
    pub gas: GasConditions,
    pub spins: Vec<SpinEntry>,
    pub probe: Option<ProbeSpec>,
    pub grids: GridSpec,
    pub models: ModelSpec,
    pub output: OutputSpec,
}

/// How a spin's <phi^2> was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    Optical,
    Override,
    /// No optical data: spectra are in units of <phi^2>.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinVariance {
    pub label: String,
    pub variance: f64,
    pub source: VarianceSource,
    pub budget: Option<NoiseBudget>,
}

fn geometry(sec: &mut Section) -> Result<(BeamGeometry, Option<f64>)> {
    let w0 = sec.require("w0", Quantity::Length)?;
    let lambda = sec.require("lambda", Quantity::Length)?;
    let l = sec.require("l", Quantity::Length)?;
    let radius = sec.quantity("cell_radius", Quantity::Length)?;
    Ok((BeamGeometry::new(w0, lambda, l)?, radius))
}

fn gas(sec: &mut Section) -> Result<GasConditions> {
    Ok(GasConditions {
        pressure: sec.require("p", Quantity::Pressure)?,
        temperature: sec.require("T", Quantity::Temperature)?,
        datum: DiffusionDatum {
            coefficient: sec.require("D0", Quantity::Diffusivity)?,
            pressure: sec.require("p0", Quantity::Pressure)?,
            temperature: sec.require("T0", Quantity::Temperature)?,
        },
        collision_cross_section: sec.quantity("sigma", Quantity::Area)?,
    })
}

fn spin(label: &str, sec: &mut Section) -> Result<SpinEntry> {
    let i_text = sec.require_raw("I")?;
    let nuclear_spin: HalfInt = i_text
        .parse()
        .map_err(|e| CliError::config(format!("{}: {e}", sec.key("I"))))?;
    let mut lines = Vec::new();
    if let Some(nu) = sec.quantity("line_upper", Quantity::Frequency)? {
        lines.push(HyperfineLine {
            f: HalfInt::from_twice(nuclear_spin.twice() + 1),
            resonance: nu,
        });
    }
    if let Some(nu) = sec.quantity("line_lower", Quantity::Frequency)? {
        lines.push(HyperfineLine {
            f: HalfInt::from_twice(nuclear_spin.twice().saturating_sub(1)),
            resonance: nu,
        });
    }
    let system = SpinSystem {
        label: label.to_string(),
        nuclear_spin,
        lines,
        abundance: sec.quantity("abundance", Quantity::Dimensionless)?.unwrap_or(1.0),
        density: sec.require("n", Quantity::Density)?,
        larmor_frequency: sec.require("f_L", Quantity::Frequency)?,
        t2: sec.require("T2", Quantity::Time)?,
        optical_half_width: sec.quantity("Gamma", Quantity::Frequency)?,
        oscillator_strength: sec.quantity("f_osc", Quantity::Dimensionless)?,
    };
    system.validate()?;
    let variance = sec.quantity("variance", Quantity::Dimensionless)?;
    if variance.is_some_and(|v| v < 0.0) {
        return Err(CliError::config(format!("{} must be non-negative", sec.key("variance"))));
    }
    Ok(SpinEntry { system, variance })
}

fn probe(sec: &mut Section, spins: &[SpinEntry]) -> Result<Option<ProbeSpec>> {
    if sec.is_empty() {
        return Ok(None);
    }
    if let Some(frequency) = sec.quantity("nu", Quantity::Frequency)? {
        return Ok(Some(ProbeSpec::Absolute { frequency }));
    }
    let detuning = sec.require("detuning", Quantity::Frequency)?;
    let reference = sec.raw("reference");
    let (label, which) = match &reference {
        Some(r) => {
            let (l, w) = r.split_once(':').unwrap_or((r.as_str(), "upper"));
            (l.to_string(), w.to_string())
        }
        None => (
            spins
                .first()
                .map(|s| s.system.label.clone())
                .ok_or_else(|| CliError::config("probe.detuning needs at least one [spin.*] section"))?,
            "upper".to_string(),
        ),
    };
    let entry = spins
        .iter()
        .find(|s| s.system.label == label)
        .ok_or_else(|| CliError::config(format!("probe.reference: no spin `{label}`")))?;
    let i2 = entry.system.nuclear_spin.twice();
    let f2 = match which.as_str() {
        "upper" => i2 + 1,
        "lower" => i2 - 1,
        _ => return Err(CliError::config(format!("probe.reference: `{which}` is not upper or lower"))),
    };
    let line = entry
        .system
        .lines
        .iter()
        .find(|l| l.f.twice() == f2)
        .ok_or_else(|| CliError::config(format!("probe.reference: spin `{label}` has no {which} line")))?;
    Ok(Some(ProbeSpec::Detuned {
        detuning,
        reference: format!("{label}:{which}"),
        frequency: line.resonance + detuning,
    }))
}

fn grids(sec: &mut Section) -> Result<GridSpec> {
    let kind = sec.choice("tau", &[("log", 0), ("linear", 1), ("list", 2), ("none", 3)])?.unwrap_or(0);
    let tau = match kind {
        2 => DelayGrid::List {
            values: sec
                .list("tau_values", Quantity::Time)?
                .ok_or_else(|| CliError::config("grids.tau = list needs grids.tau_values"))?,
        },
        3 => DelayGrid::None,
        _ => {
            let min = sec.quantity("tau_min", Quantity::Time)?.unwrap_or(1e-8);
            let max = sec.quantity("tau_max", Quantity::Time)?.unwrap_or(1e-2);
            let per_decade = sec.count("tau_per_decade")?;
            let points = match (sec.count("tau_points")?, per_decade) {
                (Some(_), Some(_)) => {
                    return Err(CliError::config("give grids.tau_points or grids.tau_per_decade, not both"))
                }
                (Some(n), None) => n,
                (None, Some(d)) => logspace_per_decade(min, max, d)?.len(),
                (None, None) => 48,
            };
            if kind == 0 {
                DelayGrid::Log { min, max, points }
            } else {
                DelayGrid::Linear { min, max, points }
            }
        }
    };
    let fkind = sec
        .choice("f", &[("default", 0), ("centered", 1), ("linear", 2), ("list", 3), ("none", 4)])?
        .unwrap_or(0);
    let frequency = match fkind {
        1 => FrequencyGrid::Centered {
            half_width: sec.require("f_half_width", Quantity::Frequency)?,
            points: sec.count("f_points")?.unwrap_or(MIN_DEFAULT_POINTS),
        },
        2 => FrequencyGrid::Linear {
            min: sec.require("f_min", Quantity::Frequency)?,
            max: sec.require("f_max", Quantity::Frequency)?,
            points: sec.count("f_points")?.unwrap_or(MIN_DEFAULT_POINTS),
        },
        3 => FrequencyGrid::List {
            values: sec
                .list("f_values", Quantity::Frequency)?
                .ok_or_else(|| CliError::config("grids.f = list needs grids.f_values"))?,
        },
        4 => FrequencyGrid::None,
        _ => FrequencyGrid::Default,
    };
    Ok(GridSpec {
        tau,
        frequency,
        transform_step: sec.quantity("dt", Quantity::Time)?,
        transform_span: sec.quantity("tau_span", Quantity::Time)?,
    })
}

fn models(sec: &mut Section) -> Result<ModelSpec> {
    let mut tol = Tolerance::default();
    if let Some(a) = sec.quantity("abs_tol", Quantity::Dimensionless)? {
        tol.abs = a;
    }
    if let Some(r) = sec.quantity("rel_tol", Quantity::Dimensionless)? {
        tol.rel = r;
    }
    Ok(ModelSpec {
        correlation: sec.choice("correlation", MODEL_CHOICES)?.unwrap_or(ModelChoice::All),
        spectrum: sec.choice("spectrum", MODEL_CHOICES)?.unwrap_or(ModelChoice::All),
        cd_limit: sec
            .choice(
                "cd_limit",
                &[
                    ("auto", LimitChoice::Auto),
                    ("collimated", LimitChoice::Collimated),
                    ("focused", LimitChoice::Focused),
                ],
            )?
            .unwrap_or(LimitChoice::Auto),
        transform_source: sec
            .choice(
                "transform_source",
                &[
                    ("analytic", TransformSource::Analytic),
                    ("collimated", TransformSource::Collimated),
                    ("focused", TransformSource::Focused),
                ],
            )?
            .unwrap_or(TransformSource::Analytic),
        sidedness: sec
            .choice(
                "sidedness",
                &[
                    ("two_sided", Sidedness::TwoSided),
                    ("one_sided", Sidedness::OneSided),
                    ("single_peak", Sidedness::SinglePeak),
                ],
            )?
            .unwrap_or(Sidedness::TwoSided),
        quadrature: tol,
    })
}

fn output(sec: &mut Section, name: &str) -> Result<OutputSpec> {
    let prefix = sec.raw("prefix").unwrap_or_else(|| name.to_string());
    if prefix.is_empty() || prefix.contains(['/', '\\']) {
        return Err(CliError::config("output.prefix must be a plain file-name stem"));
    }
    let (mut csv, mut json) = (true, true);
    if let Some(formats) = sec.raw("formats") {
        csv = false;
        json = false;
        for f in formats.split(',').map(str::trim) {
            match f {
                "csv" => csv = true,
                "json" => json = true,
                other => return Err(CliError::config(format!("output.formats: unknown format `{other}`"))),
            }
        }
    }
    Ok(OutputSpec {
        prefix,
        normalize: sec.flag("normalize")?.unwrap_or(false),
        csv,
        json,
    })
}

impl Scenario {
    /// Resolves a scenario; leaves sections it does not own (e.g. `[sweep]`, `[fit]`) in `raw`.
    pub fn from_raw(raw: &mut RawConfig) -> Result<Self> {
        let mut meta = raw.take("scenario");
        let name = meta.raw("name").unwrap_or_else(|| "scenario".to_string());
        meta.finish()?;

        let mut sec = raw.take("geometry");
        let (geometry, cell_radius) = geometry(&mut sec)?;
        sec.finish()?;
        let mut sec = raw.take("gas");
        let gas = gas(&mut sec)?;
        sec.finish()?;
        gas.diffusion_coefficient()?;

        let labels: Vec<String> = raw
            .section_names()
            .filter_map(|s| s.strip_prefix("spin."))
            .map(str::to_string)
            .collect();
        let mut spins = Vec::new();
        for label in labels {
            let mut sec = raw.take(&format!("spin.{label}"));
            spins.push(spin(&label, &mut sec)?);
            sec.finish()?;
        }

        let mut sec = raw.take("probe");
        let probe = probe(&mut sec, &spins)?;
        sec.finish()?;
        let mut sec = raw.take("grids");
        let grids = grids(&mut sec)?;
        sec.finish()?;
        let mut sec = raw.take("model");
        let models = models(&mut sec)?;
        sec.finish()?;
        let mut sec = raw.take("output");
        let output = output(&mut sec, &name)?;
        sec.finish()?;

        Ok(Scenario {
            name,
            geometry,
            cell_radius,
            gas,
            spins,
            probe,
            grids,
            models,
            output,
        })
    }

    /// Parses a standalone scenario; any unrecognised section is an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;
        let s = Self::from_raw(&mut raw)?;
        raw.finish()?;
        Ok(s)
    }

    pub fn diffusion(&self) -> f64 {
        self.gas
            .diffusion_coefficient()
            .expect("gas conditions validated at load time")
    }

    pub fn regime(&self) -> Result<RegimeReport> {
        Ok(regime_report(&self.geometry, &self.gas, self.cell_radius)?)
    }

    /// w0^2 / 4D [s].
    pub fn waist_time(&self) -> f64 {
        self.geometry.waist.powi(2) / (4.0 * self.diffusion())
    }

    /// True when the limiting forms should be the focused ones.
    pub fn prefers_focused(&self) -> bool {
        match self.models.cd_limit {
            LimitChoice::Focused => true,
            LimitChoice::Collimated => false,
            LimitChoice::Auto => self.geometry.rayleigh_range() < FOCUSED_RATIO * self.geometry.length,
        }
    }

    pub fn require_spins(&self) -> Result<()> {
        if self.spins.is_empty() {
            return Err(CliError::config("this command needs at least one [spin.<label>] section"));
        }
        Ok(())
    }

    pub fn tau_grid(&self) -> Result<Vec<f64>> {
        let tau = match &self.grids.tau {
            DelayGrid::Log { min, max, points } => {
                if !(*min > 0.0 && max > min) || *points < 2 {
                    return Err(CliError::config("log delay grid needs 0 < tau_min < tau_max and >= 2 points"));
                }
                logspace(*min, *max, *points)
            }
            DelayGrid::Linear { min, max, points } => {
                if !(*min >= 0.0 && max > min) || *points < 2 {
                    return Err(CliError::config("linear delay grid needs 0 <= tau_min < tau_max and >= 2 points"));
                }
                linspace(*min, *max, *points)
            }
            DelayGrid::List { values } => values.clone(),
            DelayGrid::None => return Err(CliError::config("grids.tau = none: no delays to evaluate")),
        };
        if tau.first().is_some_and(|&t| t < 0.0) || !spinoise_core::grid::is_strictly_increasing(&tau) {
            return Err(CliError::config("delays must be non-negative and strictly increasing"));
        }
        Ok(tau)
    }

    /// Common frequency grid for all spins, or `None` for variance-only requests.
    pub fn frequency_grid(&self) -> Result<Option<Vec<f64>>> {
        self.require_spins()?;
        let fl: Vec<f64> = self.spins.iter().map(|s| s.system.larmor_frequency).collect();
        let lo = fl.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let center = 0.5 * (lo + hi);
        let grid = match &self.grids.frequency {
            FrequencyGrid::None => return Ok(None),
            FrequencyGrid::Default => {
                let t2 = self.spins.iter().map(|s| s.system.t2).fold(f64::INFINITY, f64::min);
                let base = default_frequency_grid(0.0, t2);
                let half = base[base.len() - 1] + 0.5 * (hi - lo);
                linspace(center - half, center + half, MIN_DEFAULT_POINTS)
            }
            FrequencyGrid::Centered { half_width, points } => {
                linspace(center - half_width, center + half_width, *points)
            }
            FrequencyGrid::Linear { min, max, points } => linspace(*min, *max, *points),
            FrequencyGrid::List { values } => values.clone(),
        };
        if grid.len() < 2 || !spinoise_core::grid::is_strictly_increasing(&grid) {
            return Err(CliError::config("frequency grid must have >= 2 strictly increasing points"));
        }
        Ok(Some(grid))
    }

    pub fn variances(&self) -> Result<Vec<SpinVariance>> {
        self.spins
            .iter()
            .map(|entry| {
                let s = &entry.system;
                if let Some(v) = entry.variance {
                    return Ok(SpinVariance {
                        label: s.label.clone(),
                        variance: v,
                        source: VarianceSource::Override,
                        budget: None,
                    });
                }
                match (&self.probe, s.optical_half_width, s.oscillator_strength) {
                    (Some(p), Some(_), Some(_)) if !s.lines.is_empty() => {
                        let budget = rotation_variance(s, &self.geometry, &OpticalProbe { frequency: p.frequency() })?;
                        Ok(SpinVariance {
                            label: s.label.clone(),
                            variance: budget.variance,
                            source: VarianceSource::Optical,
                            budget: Some(budget),
                        })
                    }
                    _ => Ok(SpinVariance {
                        label: s.label.clone(),
                        variance: 1.0,
                        source: VarianceSource::Unit,
                        budget: None,
                    }),
                }
            })
            .collect()
    }

    /// Lorentzian-limit transit ratio w0^2 / (4 D T2) for a spin.
    pub fn transit_ratio(&self, spin: &SpinSystem) -> f64 {
        self.waist_time() / spin.t2
    }

    /// Focused-limit validity ratio w0 / sqrt(D T2).
    pub fn focus_ratio(&self, spin: &SpinSystem) -> f64 {
        self.geometry.waist / (self.diffusion() * spin.t2).sqrt()
    }

    /// Relaxation-to-window ratio w_e^2 / (4 D T2).
    pub fn end_ratio(&self, spin: &SpinSystem) -> f64 {
        self.geometry.end_radius().powi(2) / (4.0 * self.diffusion() * spin.t2)
    }

    /// HWHM of the bare Lorentzian [Hz].
    pub fn natural_half_width(spin: &SpinSystem) -> f64 {
        1.0 / (2.0 * PI * spin.t2)
    }
}
