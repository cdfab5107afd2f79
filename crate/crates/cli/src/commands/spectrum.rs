use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use spinoise_core::corrfn::{CorrelationCurve, CorrelationModel};
use spinoise_core::grid::uniform_delays;
use spinoise_core::spectrum::{
    analytic_spectrum, composite_spectrum, default_transform_step, line_metrics, lorentzian_reference, parseval,
    spectrum_numeric, AnalyticShape, LineMetrics, LineParams, ParsevalReport, Sidedness, SpectrumCurve,
    SpectrumModel, TransformOptions,
};

use super::RunContext;
use crate::error::Result;
use crate::output::{ensure_dir, write_csv, write_json, Column, Table};
use crate::scenario::{ModelChoice, Scenario, SpinVariance, TransformSource};

/// A spectrum summed over all spins, with its diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOutput {
    pub model: SpectrumModel,
    pub curve: SpectrumCurve,
    /// Peak and FWHM of the dominant line, or why they could not be measured.
    pub metrics: std::result::Result<LineMetrics, String>,
    /// Full-band Parseval check per spin (numeric model only).
    pub parseval: Vec<ParsevalReport>,
}

pub(crate) fn selected_models(s: &Scenario, choice: ModelChoice) -> Vec<SpectrumModel> {
    let auto = if s.prefers_focused() {
        SpectrumModel::FocusedAnalytic
    } else {
        SpectrumModel::CollimatedAnalytic
    };
    match choice {
        ModelChoice::Numeric => vec![SpectrumModel::NumericWk],
        ModelChoice::Analytic => vec![auto],
        ModelChoice::Collimated => vec![SpectrumModel::CollimatedAnalytic],
        ModelChoice::Focused => vec![SpectrumModel::FocusedAnalytic],
        ModelChoice::Lorentzian => vec![SpectrumModel::Lorentzian],
        ModelChoice::All => vec![
            SpectrumModel::NumericWk,
            SpectrumModel::CollimatedAnalytic,
            SpectrumModel::FocusedAnalytic,
            SpectrumModel::Lorentzian,
        ],
    }
}

/// Diffusion correlation on the uniform transform grid.
fn transform_curve(s: &Scenario, grid: &[f64]) -> Result<CorrelationCurve> {
    let f_max = grid.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let dt = s
        .grids
        .transform_step
        .unwrap_or_else(|| default_transform_step(f_max, s.waist_time()));
    let t2_max = s.spins.iter().map(|e| e.system.t2).fold(0.0, f64::max);
    let span = s.grids.transform_span.unwrap_or(10.0 * t2_max);
    let tau = uniform_delays(dt, span)?;
    log::debug!("transform grid: dt = {dt:e} s, {} delays", tau.len());
    let model = match s.models.transform_source {
        TransformSource::Analytic => CorrelationModel::Analytic,
        TransformSource::Collimated => CorrelationModel::CollimatedLimit,
        TransformSource::Focused => CorrelationModel::FocusedLimit,
    };
    Ok(CorrelationCurve::diffusion(
        model,
        &s.geometry,
        s.diffusion(),
        &tau,
        &s.models.quadrature,
    )?)
}

/// Computes the requested spectra (composite over spins) on the scenario grid.
pub fn compute_spectra(
    s: &Scenario,
    choice: ModelChoice,
    grid: &[f64],
    variances: &[SpinVariance],
) -> Result<Vec<SpectrumOutput>> {
    s.require_spins()?;
    let sidedness = s.models.sidedness;
    let mut outputs = Vec::new();
    let mut diffusion_curve = None;
    for model in selected_models(s, choice) {
        let mut parts = Vec::new();
        let mut reports = Vec::new();
        for (entry, var) in s.spins.iter().zip(variances) {
            let spin = &entry.system;
            let params = LineParams {
                waist: s.geometry.waist,
                diffusion: s.diffusion(),
                t2: spin.t2,
                larmor_frequency: spin.larmor_frequency,
            };
            let curve = match model {
                SpectrumModel::NumericWk => {
                    if diffusion_curve.is_none() {
                        diffusion_curve = Some(transform_curve(s, grid)?);
                    }
                    let corr = diffusion_curve
                        .clone()
                        .expect("set above")
                        .with_precession(spin.larmor_frequency, spin.t2)?;
                    reports.push(parseval(&corr, var.variance)?);
                    let one_sided = sidedness != Sidedness::TwoSided;
                    spectrum_numeric(&corr, grid, var.variance, TransformOptions { one_sided })?
                }
                SpectrumModel::CollimatedAnalytic => {
                    analytic_spectrum(AnalyticShape::Collimated, grid, &params, var.variance, sidedness)?
                }
                SpectrumModel::FocusedAnalytic => {
                    analytic_spectrum(AnalyticShape::Focused, grid, &params, var.variance, sidedness)?
                }
                SpectrumModel::Lorentzian | SpectrumModel::Composite => {
                    let two = lorentzian_reference(grid, spin.larmor_frequency, spin.t2, var.variance)?;
                    if sidedness == Sidedness::TwoSided {
                        two
                    } else {
                        two.to_one_sided()?
                    }
                }
            };
            parts.push(curve);
        }
        let mut curve = composite_spectrum(&parts)?;
        if parts.len() == 1 {
            curve.model = model;
        }
        let metrics = line_metrics(&curve).map_err(|e| e.to_string());
        outputs.push(SpectrumOutput {
            model,
            curve,
            metrics,
            parseval: reports,
        });
    }
    Ok(outputs)
}

/// Writes `<prefix>_spectrum_<model>.{csv,json}` per requested model, or
/// `<prefix>_variance.json` when the scenario has no frequency grid.
pub fn run_spectrum(s: &Scenario, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    Ok(spectrum_files(s, ctx)?.0)
}

/// As [`run_spectrum`], also returning the computed spectra and variances.
pub(crate) fn spectrum_files(
    s: &Scenario,
    ctx: &RunContext,
) -> Result<(Vec<PathBuf>, Vec<SpectrumOutput>, Vec<SpinVariance>)> {
    s.require_spins()?;
    let variances = s.variances()?;
    let total: f64 = variances.iter().map(|v| v.variance).sum();
    ensure_dir(ctx.out_dir())?;
    let prefix = &s.output.prefix;
    let Some(grid) = s.frequency_grid()? else {
        let doc = json!({ "scenario": s, "spins": variances, "total_variance": total });
        let path = write_json(&ctx.path(&format!("{prefix}_variance.json")), &doc)?;
        return Ok((vec![path], Vec::new(), variances));
    };
    let choice = ctx.model.unwrap_or(s.models.spectrum);
    let normalize = ctx.normalize || s.output.normalize;
    let outputs = compute_spectra(s, choice, &grid, &variances)?;
    let mut files = Vec::new();
    for out in &outputs {
        let name = out.model.as_str();
        let mut table = Table::default();
        table.push("f_Hz", Column::Num(out.curve.f.clone()));
        table.push("S_rad2_per_Hz", Column::Num(out.curve.values.clone()));
        if normalize {
            table.push("S_normalized", Column::Num(out.curve.peak_normalized()));
        }
        table.push("model", Column::Text(vec![name.to_string(); out.curve.f.len()]));
        if s.output.csv {
            files.push(write_csv(&ctx.path(&format!("{prefix}_spectrum_{name}.csv")), s, &table)?);
        }
        if s.output.json {
            let doc = json!({
                "scenario": s,
                "model": out.model,
                "sidedness": out.curve.sidedness,
                "spins": variances,
                "total_variance": total,
                "metrics": out.metrics.as_ref().ok(),
                "metrics_error": out.metrics.as_ref().err(),
                "parseval": out.parseval,
                "warnings": out.curve.warnings,
                "columns": table.to_json(),
            });
            files.push(write_json(&ctx.path(&format!("{prefix}_spectrum_{name}.json")), &doc)?);
        }
    }
    Ok((files, outputs, variances))
}
