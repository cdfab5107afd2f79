use std::path::PathBuf;

use serde::Serialize;
use spinoise_core::corrfn::{RegimeReport, COLLIMATED_RATIO, FOCUSED_RATIO};
use spinoise_core::spectrum::FOCUSED_VALIDITY_LIMIT;

use super::RunContext;
use crate::error::Result;
use crate::output::{ensure_dir, write_json};
use crate::scenario::Scenario;

/// Where z_R sits relative to the cell length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryClass {
    Focused,
    Intermediate,
    Collimated,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpinCheck {
    pub label: String,
    /// w0^2 / (4 D T2).
    pub transit_ratio: f64,
    /// w0 / sqrt(D T2); the focused closed form needs this well below one.
    pub focus_ratio: f64,
    pub focused_form_valid: bool,
    /// w_e^2 / (4 D T2); large values mean relaxation ends the correlation
    /// before atoms leave the end windows.
    pub end_ratio: f64,
    pub end_windows_negligible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub regime: RegimeReport,
    pub rayleigh_to_length: f64,
    pub geometry_class: GeometryClass,
    pub na_correction: f64,
    /// End-window beam radius over the cell radius, when a cell radius is given.
    pub beam_to_cell: Option<f64>,
    pub spins: Vec<SpinCheck>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn build(s: &Scenario) -> Result<Self> {
        let regime = s.regime()?;
        let ratio = s.geometry.rayleigh_range() / s.geometry.length;
        let geometry_class = if ratio < FOCUSED_RATIO {
            GeometryClass::Focused
        } else if ratio > COLLIMATED_RATIO {
            GeometryClass::Collimated
        } else {
            GeometryClass::Intermediate
        };
        let mut warnings = regime.warnings.clone();
        if geometry_class == GeometryClass::Intermediate {
            warnings.push(format!(
                "z_R/l = {ratio:.3} lies between the focused ({FOCUSED_RATIO}) and collimated ({COLLIMATED_RATIO}) limits; prefer the exact forms"
            ));
        }
        let beam_to_cell = s.cell_radius.map(|r| s.geometry.end_radius() / r);
        if let Some(b) = beam_to_cell {
            if b >= 1.0 {
                warnings.push(format!("beam radius at the windows exceeds the cell radius ({b:.3}x)"));
            }
        }
        let spins: Vec<SpinCheck> = s
            .spins
            .iter()
            .map(|entry| {
                let spin = &entry.system;
                let focus_ratio = s.focus_ratio(spin);
                let end_ratio = s.end_ratio(spin);
                SpinCheck {
                    label: spin.label.clone(),
                    transit_ratio: s.transit_ratio(spin),
                    focus_ratio,
                    focused_form_valid: focus_ratio < FOCUSED_VALIDITY_LIMIT,
                    end_ratio,
                    end_windows_negligible: end_ratio >= COLLIMATED_RATIO,
                }
            })
            .collect();
        for c in &spins {
            if geometry_class == GeometryClass::Focused && !c.focused_form_valid {
                warnings.push(format!(
                    "{}: w0/sqrt(D T2) = {:.3} is not small; the focused line shape is approximate",
                    c.label, c.focus_ratio
                ));
            }
            if !c.end_windows_negligible {
                warnings.push(format!(
                    "{}: w_e^2/(4 D T2) = {:.3}; atoms reach the end windows within T2",
                    c.label, c.end_ratio
                ));
            }
        }
        Ok(ValidationReport {
            scenario: s.name.clone(),
            na_correction: regime.na_correction,
            regime,
            rayleigh_to_length: ratio,
            geometry_class,
            beam_to_cell,
            spins,
            warnings,
        })
    }
}

/// Writes `<prefix>_validate.json` and prints the same report to stdout.
pub fn run_validate(s: &Scenario, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let report = ValidationReport::build(s)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    ensure_dir(ctx.out_dir())?;
    let path = write_json(&ctx.path(&format!("{}_validate.json", s.output.prefix)), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    Ok(vec![path])
}
