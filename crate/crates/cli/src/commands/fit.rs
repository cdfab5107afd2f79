use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use spinoise_core::fitkit::{fit, fit_multistart, FitProblem, FitResult, ForwardModel, FreeParam, Param, ParamSet};

use super::RunContext;
use crate::config::RawConfig;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, read_csv, write_json};
use crate::units::Quantity;

/// A fit request: a spectrum file, a lineshape, fixed values and free parameters.
#[derive(Debug, Clone, Serialize)]
pub struct FitConfig {
    pub data: PathBuf,
    pub model: ForwardModel,
    pub column: String,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub multistart: usize,
    pub seed: u64,
    pub prefix: String,
    pub fixed: Vec<(Param, f64)>,
    pub free: Vec<FreeParam>,
}

fn quantity(p: Param) -> Quantity {
    match p {
        Param::T2 => Quantity::Time,
        Param::Amplitude => Quantity::Dimensionless,
        Param::LarmorFrequency => Quantity::Frequency,
        Param::Waist => Quantity::Length,
        Param::Diffusion => Quantity::Diffusivity,
    }
}

fn parse_param(name: &str, context: &str) -> Result<Param> {
    name.parse()
        .map_err(|_| CliError::config(format!("{context}: unknown fit parameter `{name}`")))
}

impl FitConfig {
    /// Reads `[fit]`, `[fixed]` and `[free.<param>]`. A relative data path is
    /// taken relative to `base_dir`; `data_override` replaces it.
    pub fn from_raw(raw: &mut RawConfig, base_dir: Option<&Path>, data_override: Option<&Path>) -> Result<Self> {
        let mut sec = raw.take("fit");
        let data = match (data_override, sec.raw("data")) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(d)) => {
                let p = PathBuf::from(d);
                match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                }
            }
            (None, None) => return Err(CliError::config("fit needs fit.data or --data")),
        };
        let model = sec
            .choice(
                "model",
                &[
                    ("lorentzian", ForwardModel::Lorentzian),
                    ("collimated", ForwardModel::Collimated),
                    ("focused", ForwardModel::Focused),
                ],
            )?
            .ok_or_else(|| CliError::config("missing required setting fit.model"))?;
        let column = sec.raw("column").unwrap_or_else(|| "S_rad2_per_Hz".to_string());
        let f_min = sec.quantity("f_min", Quantity::Frequency)?;
        let f_max = sec.quantity("f_max", Quantity::Frequency)?;
        let multistart = sec.count("multistart")?.unwrap_or(0);
        let seed = sec.count("seed")?.unwrap_or(0) as u64;
        let prefix = sec.raw("prefix").unwrap_or_else(|| "fit".to_string());
        sec.finish()?;

        let mut fixed = Vec::new();
        let mut sec = raw.take("fixed");
        for (key, value) in sec.drain() {
            let p = parse_param(&key, "[fixed]")?;
            let v = crate::units::parse(&format!("fixed.{key}"), &value, quantity(p))?;
            fixed.push((p, v));
        }

        let names: Vec<String> = raw
            .section_names()
            .filter_map(|s| s.strip_prefix("free."))
            .map(str::to_string)
            .collect();
        let mut free = Vec::new();
        for name in names {
            let p = parse_param(&name, &format!("[free.{name}]"))?;
            let mut sec = raw.take(&format!("free.{name}"));
            let q = quantity(p);
            free.push(FreeParam::new(
                p,
                sec.require("initial", q)?,
                sec.require("lower", q)?,
                sec.require("upper", q)?,
            ));
            sec.finish()?;
        }
        if free.is_empty() {
            return Err(CliError::config("fit needs at least one [free.<param>] section"));
        }
        for p in model.params() {
            let n = fixed.iter().filter(|(q, _)| q == p).count() + free.iter().filter(|f| f.param == *p).count();
            if n == 0 {
                return Err(CliError::config(format!("{} needs {} fixed or free", model_name(model), p.name())));
            }
            if n > 1 {
                return Err(CliError::config(format!("{} is both fixed and free", p.name())));
            }
        }
        Ok(FitConfig {
            data,
            model,
            column,
            f_min,
            f_max,
            multistart,
            seed,
            prefix,
            fixed,
            free,
        })
    }

    /// Loads the spectrum file and builds the fit problem.
    pub fn problem(&self) -> Result<FitProblem> {
        let (headers, rows) = read_csv(&self.data)?;
        let col = |name: &str| -> Result<usize> {
            headers.iter().position(|h| h == name).ok_or_else(|| {
                CliError::config(format!("{}: no column `{name}`", self.data.display()))
            })
        };
        let (fi, si) = (col("f_Hz")?, col(&self.column)?);
        let number = |row: &[String], i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| CliError::Numeric(format!("{}: unreadable value in column {i}", self.data.display())))
        };
        let (mut f, mut data) = (Vec::new(), Vec::new());
        for row in &rows {
            let x = number(row, fi)?;
            if self.f_min.is_some_and(|m| x < m) || self.f_max.is_some_and(|m| x > m) {
                continue;
            }
            f.push(x);
            data.push(number(row, si)?);
        }
        let mut base = ParamSet {
            t2: f64::NAN,
            amplitude: f64::NAN,
            larmor_frequency: f64::NAN,
            waist: f64::NAN,
            diffusion: f64::NAN,
        };
        for &(p, v) in &self.fixed {
            base.set(p, v);
        }
        for fp in &self.free {
            base.set(fp.param, fp.initial);
        }
        let problem = FitProblem {
            f,
            data,
            weights: None,
            model: self.model,
            base,
            free: self.free.clone(),
        };
        problem.validate()?;
        Ok(problem)
    }
}

fn model_name(m: ForwardModel) -> &'static str {
    match m {
        ForwardModel::Lorentzian => "the lorentzian model",
        ForwardModel::Collimated => "the collimated model",
        ForwardModel::Focused => "the focused model",
    }
}

/// Fits the configured spectrum file and writes `<prefix>_fit.json`.
pub fn run_fit(cfg: &FitConfig, ctx: &RunContext) -> Result<(FitResult, Vec<PathBuf>)> {
    let problem = cfg.problem()?;
    let result = if cfg.multistart > 0 {
        fit_multistart(&problem, cfg.multistart, cfg.seed)?
    } else {
        fit(&problem)?
    };
    if !result.converged {
        log::warn!("fit did not converge ({:?})", result.termination);
    }
    let estimates: serde_json::Map<String, serde_json::Value> = result
        .free
        .iter()
        .map(|&p| {
            (
                p.name().to_string(),
                json!({ "value": result.value(p), "std_error": result.std_error(p) }),
            )
        })
        .collect();
    ensure_dir(ctx.out_dir())?;
    let doc = json!({
        "config": cfg,
        "points": problem.f.len(),
        "estimates": estimates,
        "result": result,
    });
    let path = write_json(&ctx.path(&format!("{}_fit.json", cfg.prefix)), &doc)?;
    Ok((result, vec![path]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_with_units() {
        let text = "
[fit]
data = spec.csv
model = focused
[fixed]
larmor_frequency = 332 kHz
waist = 2 um
diffusion = 2.865 cm2/s
[free.t2]
initial = 0.8 ms
lower = 1 us
upper = 1 s
[free.amplitude]
initial = 1e-12
lower = 1e-20
upper = 1
";
        let mut raw = RawConfig::parse(text).unwrap();
        let cfg = FitConfig::from_raw(&mut raw, Some(Path::new("/data")), None).unwrap();
        raw.finish().unwrap();
        assert_eq!(cfg.data, PathBuf::from("/data/spec.csv"));
        assert_eq!(cfg.fixed[2], (Param::Diffusion, 2.865e-4));
        let t2 = cfg.free.iter().find(|f| f.param == Param::T2).unwrap();
        assert!((t2.initial - 0.8e-3).abs() < 1e-18);
    }

    #[test]
    fn rejects_incomplete_parameter_sets() {
        let base = "[fit]\ndata = x.csv\nmodel = lorentzian\n[free.t2]\ninitial = 1 ms\nlower = 1 us\nupper = 1 s\n";
        let missing = RawConfig::parse(base).map(|mut r| FitConfig::from_raw(&mut r, None, None));
        assert!(matches!(missing, Ok(Err(CliError::Config(_)))));
        let twice = format!("{base}[fixed]\nt2 = 1 ms\namplitude = 1\nlarmor_frequency = 1 kHz\n");
        let r = FitConfig::from_raw(&mut RawConfig::parse(&twice).unwrap(), None, None);
        assert!(r.unwrap_err().to_string().contains("both fixed and free"));
        let unknown = format!("{base}[fixed]\nbogus = 1\n");
        assert!(FitConfig::from_raw(&mut RawConfig::parse(&unknown).unwrap(), None, None).is_err());
    }
}
