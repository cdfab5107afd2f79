use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;
use spinoise_core::corrfn::{cd_analytic, cd_collimated, cd_focused, cd_numeric};

use super::RunContext;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_csv, write_json, Column, Table};
use crate::scenario::{ModelChoice, Scenario};

/// Evaluates the diffusion correlation on the scenario's delay grid and
/// writes `<prefix>_correlation.{csv,json}`.
pub fn run_correlation(s: &Scenario, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let model = ctx.model.unwrap_or(s.models.correlation);
    let tau = s.tau_grid()?;
    let report = s.regime()?;
    let (geom, d) = (s.geometry, s.diffusion());
    let focused = s.prefers_focused();
    let limit_name = if focused { "focused" } else { "collimated" };

    let mut table = Table::default();
    table.push("tau_s", Column::Num(tau.clone()));
    if matches!(model, ModelChoice::Numeric | ModelChoice::All) {
        let tol = s.models.quadrature;
        let pool = ctx.pool()?;
        let values: Vec<(f64, f64)> = pool.install(|| {
            tau.par_iter()
                .map(|&t| cd_numeric(&geom, d, t, &tol).map(|q| (q.value, q.error)))
                .collect::<spinoise_core::Result<Vec<_>>>()
        })?;
        table.push("cd_numeric", Column::Num(values.iter().map(|v| v.0).collect()));
        table.push("cd_numeric_error", Column::Num(values.iter().map(|v| v.1).collect()));
    }
    if matches!(model, ModelChoice::Analytic | ModelChoice::All) {
        table.push("cd_analytic", Column::Num(tau.iter().map(|&t| cd_analytic(&geom, d, t)).collect()));
    }
    let limit = |focused: bool| -> Vec<f64> {
        tau.iter()
            .map(|&t| if focused { cd_focused(geom.waist, d, t) } else { cd_collimated(geom.waist, d, t) })
            .collect()
    };
    match model {
        ModelChoice::All => table.push("cd_limit", Column::Num(limit(focused))),
        ModelChoice::Collimated => table.push("cd_collimated", Column::Num(limit(false))),
        ModelChoice::Focused => table.push("cd_focused", Column::Num(limit(true))),
        ModelChoice::Lorentzian => {
            return Err(CliError::config("`lorentzian` is a spectrum model, not a correlation model"))
        }
        _ => {}
    }
    table.push(
        "regime_label",
        Column::Text(tau.iter().map(|&t| report.label(t).as_str().to_string()).collect()),
    );

    ensure_dir(ctx.out_dir())?;
    let prefix = &s.output.prefix;
    let mut files = Vec::new();
    if s.output.csv {
        files.push(write_csv(&ctx.path(&format!("{prefix}_correlation.csv")), s, &table)?);
    }
    if s.output.json {
        let doc = json!({
            "scenario": s,
            "model": model,
            "limit_model": limit_name,
            "regime": report,
            "warnings": report.warnings,
            "columns": table.to_json(),
        });
        files.push(write_json(&ctx.path(&format!("{prefix}_correlation.json")), &doc)?);
    }
    Ok(files)
}
