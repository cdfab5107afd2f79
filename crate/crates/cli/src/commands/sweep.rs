use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::spectrum::{compute_spectra, selected_models, spectrum_files};
use super::{run_correlation, RunContext};
use crate::config::RawConfig;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_csv, write_json, Column, Table};
use crate::scenario::{ModelChoice, Scenario, MODEL_CHOICES};
use crate::units::{self, Quantity};

/// One swept parameter: a `section.key` path and the raw values it takes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepRun {
    Correlation,
    Spectrum,
    /// Correlation and spectrum files for every point.
    Both,
}

/// How several axes combine into points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every combination; the last axis varies fastest.
    Product,
    /// Axes advance together; all must have the same length.
    Zip,
}

/// A `[sweep]` section: axes over a shared base scenario.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    pub run: SweepRun,
    pub mode: SweepMode,
    /// Spectrum model whose line metrics go into the summary.
    pub metric: Option<ModelChoice>,
    base: RawConfig,
}

/// A resolved sweep point.
#[derive(Debug, Clone)]
struct Point {
    index: usize,
    values: Vec<String>,
    scenario: Scenario,
}

#[derive(Debug, Clone, Default)]
struct PointSummary {
    fwhm: f64,
    peak_frequency: f64,
    peak_value: f64,
    variance: f64,
    message: String,
}

impl SweepSpec {
    /// Splits the `[sweep]` section off a configuration; everything else is the
    /// base scenario. Any key containing a dot is an axis.
    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        if !raw.has("sweep") {
            return Err(CliError::config("the sweep command needs a [sweep] section"));
        }
        let mut section = raw.take("sweep");
        let run = section
            .choice(
                "run",
                &[
                    ("correlation", SweepRun::Correlation),
                    ("spectrum", SweepRun::Spectrum),
                    ("both", SweepRun::Both),
                ],
            )?
            .unwrap_or(SweepRun::Spectrum);
        let mode = section
            .choice("mode", &[("product", SweepMode::Product), ("zip", SweepMode::Zip)])?
            .unwrap_or(SweepMode::Product);
        let metric = section.choice("metric", MODEL_CHOICES)?;
        if metric == Some(ModelChoice::All) {
            return Err(CliError::config("sweep.metric must name a single model"));
        }
        let mut axes = Vec::new();
        for (key, value) in section.drain() {
            if !key.contains('.') {
                return Err(CliError::config(format!("unknown key sweep.{key}")));
            }
            let values = units::split_list(&value);
            if values.is_empty() {
                return Err(CliError::config(format!("sweep.{key}: no values to sweep")));
            }
            axes.push(SweepAxis { path: key, values });
        }
        if axes.is_empty() {
            return Err(CliError::config("[sweep] names no parameters (use `section.key = v1, v2, ...`)"));
        }
        if mode == SweepMode::Zip && axes.iter().any(|a| a.values.len() != axes[0].values.len()) {
            return Err(CliError::config("sweep.mode = zip needs every axis to have the same number of values"));
        }
        Ok(SweepSpec {
            axes,
            run,
            mode,
            metric,
            base: raw,
        })
    }

    /// Value indices per point, in output order.
    fn combinations(&self) -> Vec<Vec<usize>> {
        match self.mode {
            SweepMode::Zip => (0..self.axes[0].values.len())
                .map(|i| vec![i; self.axes.len()])
                .collect(),
            SweepMode::Product => {
                let mut out = vec![Vec::new()];
                for axis in &self.axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            (0..axis.values.len()).map(move |i| {
                                let mut p = prefix.clone();
                                p.push(i);
                                p
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    /// The base scenario with no axis applied.
    pub fn base_scenario(&self) -> Result<Scenario> {
        let mut raw = self.base.clone();
        let s = Scenario::from_raw(&mut raw)?;
        raw.finish()?;
        Ok(s)
    }

    /// Resolves every point up front so that configuration mistakes abort the
    /// sweep before any work is done.
    fn points(&self) -> Result<Vec<Point>> {
        let prefix = self.base_scenario()?.output.prefix;
        let combos = self.combinations();
        let width = combos.len().saturating_sub(1).to_string().len().max(3);
        combos
            .into_iter()
            .enumerate()
            .map(|(index, idx)| {
                let mut raw = self.base.clone();
                let values: Vec<String> = self.axes.iter().zip(&idx).map(|(a, &i)| a.values[i].clone()).collect();
                for (axis, v) in self.axes.iter().zip(&values) {
                    raw.set(&axis.path, v)?;
                }
                let mut scenario = Scenario::from_raw(&mut raw)
                    .map_err(|e| CliError::config(format!("sweep point {index} ({}): {e}", values.join(", "))))?;
                raw.finish()?;
                scenario.output.prefix = format!("{prefix}_p{index:0width$}");
                Ok(Point {
                    index,
                    values,
                    scenario,
                })
            })
            .collect()
    }
}

/// Best-effort SI value of an axis entry (NaN when it is not a quantity).
fn si_value(text: &str) -> f64 {
    use Quantity::*;
    [Length, Pressure, Temperature, Frequency, Time, Diffusivity, Density, Area, Dimensionless]
        .into_iter()
        .find_map(|q| units::parse("", text, q).ok())
        .unwrap_or(f64::NAN)
}

fn run_point(spec: &SweepSpec, point: &Point, ctx: &RunContext) -> Result<PointSummary> {
    let s = &point.scenario;
    let mut summary = PointSummary {
        fwhm: f64::NAN,
        peak_frequency: f64::NAN,
        peak_value: f64::NAN,
        variance: f64::NAN,
        message: String::new(),
    };
    let mut outputs = Vec::new();
    let mut variances = None;
    if spec.run != SweepRun::Spectrum {
        run_correlation(s, ctx)?;
    }
    if spec.run != SweepRun::Correlation {
        let (_, out, var) = spectrum_files(s, ctx)?;
        outputs = out;
        variances = Some(var);
    }
    if s.spins.is_empty() {
        return Ok(summary);
    }
    let variances = match variances {
        Some(v) => v,
        None => s.variances()?,
    };
    summary.variance = variances.iter().map(|v| v.variance).sum();
    let Some(grid) = s.frequency_grid()? else {
        return Ok(summary);
    };
    let wanted = spec.metric.map(|m| selected_models(s, m)[0]);
    let found = match wanted {
        Some(model) => outputs.into_iter().find(|o| o.model == model),
        None => outputs.into_iter().next(),
    };
    let out = match found {
        Some(o) => o,
        None => {
            let choice = spec.metric.unwrap_or(ModelChoice::Analytic);
            compute_spectra(s, choice, &grid, &variances)?.remove(0)
        }
    };
    match out.metrics {
        Ok(m) => {
            summary.fwhm = m.fwhm;
            summary.peak_frequency = m.peak_frequency;
            summary.peak_value = m.peak_value;
        }
        Err(e) => summary.message = format!("{}: {e}", out.model.as_str()),
    }
    Ok(summary)
}

/// Runs every sweep point (concurrently, bounded by `--jobs`) and writes
/// `<prefix>_summary.{csv,json}`. Failed points are recorded in the summary
/// and reported as a partial sweep.
pub fn run_sweep(spec: &SweepSpec, ctx: &RunContext) -> Result<Vec<PathBuf>> {
    let base = spec.base_scenario()?;
    let points = spec.points()?;
    ensure_dir(ctx.out_dir())?;
    // Each point runs single-threaded inside the shared pool.
    let inner = RunContext {
        jobs: Some(1),
        ..ctx.clone()
    };
    let pool = ctx.pool()?;
    let results: Vec<std::result::Result<PointSummary, String>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                run_point(spec, p, &inner).map_err(|e| {
                    log::warn!("sweep point {} failed: {e}", p.index);
                    e.to_string()
                })
            })
            .collect()
    });

    let n = points.len();
    let mut table = Table::default();
    table.push("point", Column::Text(points.iter().map(|p| p.index.to_string()).collect()));
    for (k, axis) in spec.axes.iter().enumerate() {
        table.push(&axis.path, Column::Text(points.iter().map(|p| p.values[k].clone()).collect()));
        table.push(
            &format!("{}_SI", axis.path),
            Column::Num(points.iter().map(|p| si_value(&p.values[k])).collect()),
        );
    }
    let ok = |f: fn(&PointSummary) -> f64| -> Vec<f64> {
        results.iter().map(|r| r.as_ref().map(f).unwrap_or(f64::NAN)).collect()
    };
    table.push(
        "status",
        Column::Text(
            results
                .iter()
                .map(|r| if r.is_ok() { "ok" } else { "failed" }.to_string())
                .collect(),
        ),
    );
    table.push("fwhm_Hz", Column::Num(ok(|s| s.fwhm)));
    table.push("peak_frequency_Hz", Column::Num(ok(|s| s.peak_frequency)));
    table.push("peak_rad2_per_Hz", Column::Num(ok(|s| s.peak_value)));
    table.push("variance_rad2", Column::Num(ok(|s| s.variance)));
    table.push(
        "message",
        Column::Text(
            results
                .iter()
                .map(|r| match r {
                    Ok(s) => s.message.clone(),
                    Err(e) => e.clone(),
                })
                .collect(),
        ),
    );

    let prefix = &base.output.prefix;
    let resolved = json!({
        "base": base,
        "run": spec.run,
        "mode": spec.mode,
        "metric": spec.metric,
        "axes": spec.axes,
    });
    let files = vec![
        write_csv(&ctx.path(&format!("{prefix}_summary.csv")), &resolved, &table)?,
        write_json(
            &ctx.path(&format!("{prefix}_summary.json")),
            &json!({ "sweep": resolved, "columns": table.to_json() }),
        )?,
    ];
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        return Err(CliError::PartialSweep { failed, total: n });
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
[geometry]
w0 = 50 um
lambda = 795 nm
l = 15 mm
[gas]
p = 100 torr
T = 100 C
D0 = 0.159 cm2/s
p0 = 760 torr
T0 = 60 C
[spin.a]
I = 5/2
n = 1e12 cm-3
f_L = 332 kHz
T2 = 1 ms
";

    #[test]
    fn product_and_zip_orders() {
        let text = format!("{BASE}[sweep]\ngas.p = 50, 800 torr\ngeometry.w0 = 2, 50 um\n");
        let spec = SweepSpec::from_raw(RawConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(spec.axes[0].path, "gas.p");
        assert_eq!(spec.combinations(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let pts = spec.points().unwrap();
        assert_eq!(pts[1].values, ["50 torr", "50 um"]);
        assert!((pts[1].scenario.geometry.waist - 50e-6).abs() < 1e-18);
        assert!(pts[3].scenario.output.prefix.ends_with("_p003"));

        let text = format!("{BASE}[sweep]\nmode = zip\ngas.p = 50, 800 torr\ngeometry.w0 = 2, 50 um\n");
        let spec = SweepSpec::from_raw(RawConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(spec.combinations(), vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn rejects_bad_sweeps() {
        for tail in [
            "[sweep]\n",
            "[sweep]\ngas.p =\n",
            "[sweep]\ngas.p = ,\n",
            "[sweep]\nbogus = 1\n",
            "[sweep]\nmode = zip\ngas.p = 1, 2 torr\ngeometry.w0 = 1 um\n",
            "[sweep]\nmetric = all\ngas.p = 1 torr\n",
        ] {
            let r = SweepSpec::from_raw(RawConfig::parse(&format!("{BASE}{tail}")).unwrap());
            assert!(matches!(r, Err(CliError::Config(_))), "{tail}: {r:?}");
        }
        let spec =
            SweepSpec::from_raw(RawConfig::parse(&format!("{BASE}[sweep]\nnowhere.p = 1 torr\n")).unwrap()).unwrap();
        assert!(matches!(spec.points(), Err(CliError::Config(_))));
        let spec =
            SweepSpec::from_raw(RawConfig::parse(&format!("{BASE}[sweep]\ngas.p = 1 um\n")).unwrap()).unwrap();
        assert!(matches!(spec.points(), Err(CliError::Config(_))));
    }

    #[test]
    fn si_values() {
        assert_eq!(si_value("2 um"), 2e-6);
        assert_eq!(si_value("0.5"), 0.5);
        assert!(si_value("5/2").is_nan());
    }
}
