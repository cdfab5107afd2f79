//! Command-line driver: reads a sectioned scenario file, runs correlation,
//! spectrum, validation, sweep or fit computations, and writes CSV/JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod units;

pub use error::{CliError, Result};

pub mod app {
    use std::path::{Path, PathBuf};

    use clap::{Parser, Subcommand};

    use crate::commands::{
        run_correlation, run_fit, run_spectrum, run_sweep, run_validate, FitConfig, RunContext, SweepSpec,
    };
    use crate::config::RawConfig;
    use crate::error::Result;
    use crate::scenario::{ModelChoice, Scenario};

    #[derive(Debug, Parser)]
    #[command(name = "spinoise", version, about = "Diffusion spin-noise correlation functions and spectra")]
    pub struct Cli {
        #[command(subcommand)]
        pub command: Command,
        /// Scenario file.
        #[arg(long, global = true, value_name = "PATH")]
        pub config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, global = true, value_name = "DIR", default_value = ".")]
        pub out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long, global = true, value_name = "N")]
        pub jobs: Option<usize>,
        /// Add a peak-normalised spectrum column.
        #[arg(long, global = true)]
        pub normalize: bool,
        /// Override the scenario's model selection.
        #[arg(long, global = true, value_enum)]
        pub model: Option<ModelChoice>,
    }

    #[derive(Debug, Subcommand)]
    pub enum Command {
        /// Diffusion correlation C_D(tau) on the delay grid.
        Correlation,
        /// Noise spectra (or the variance alone when grids.f = none).
        Spectrum,
        /// Regime and validity report.
        Validate,
        /// Run a [sweep] over scenario parameters.
        Sweep,
        /// Fit a lineshape to a spectrum CSV.
        Fit {
            /// Spectrum CSV (overrides fit.data).
            #[arg(long, value_name = "PATH")]
            data: Option<PathBuf>,
        },
    }

    fn load(cli: &Cli) -> Result<RawConfig> {
        match &cli.config {
            Some(p) => RawConfig::load(p),
            None => Err(crate::CliError::config("--config PATH is required")),
        }
    }

    /// Drops the sections owned by `sweep` and `fit`, so that such files are
    /// also valid scenarios (a sweep file at its base point).
    fn strip_command_sections(raw: &mut RawConfig) {
        let owned: Vec<String> = raw
            .section_names()
            .filter(|s| matches!(*s, "sweep" | "fit" | "fixed") || s.starts_with("free."))
            .map(str::to_string)
            .collect();
        for name in owned {
            raw.take(&name);
        }
    }

    fn scenario(mut raw: RawConfig) -> Result<Scenario> {
        strip_command_sections(&mut raw);
        let s = Scenario::from_raw(&mut raw)?;
        raw.finish()?;
        Ok(s)
    }

    /// Runs a parsed command line, returning the files written.
    pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
        let ctx = RunContext {
            out: cli.out.clone(),
            jobs: cli.jobs,
            normalize: cli.normalize,
            model: cli.model,
        };
        if ctx.jobs == Some(0) {
            return Err(crate::CliError::config("--jobs must be at least 1"));
        }
        let raw = load(cli)?;
        match &cli.command {
            Command::Correlation => run_correlation(&scenario(raw)?, &ctx),
            Command::Spectrum => run_spectrum(&scenario(raw)?, &ctx),
            Command::Validate => run_validate(&scenario(raw)?, &ctx),
            Command::Sweep => run_sweep(&SweepSpec::from_raw(raw)?, &ctx),
            Command::Fit { data } => {
                let mut raw = raw;
                let dir = cli.config.as_deref().and_then(Path::parent);
                let cfg = FitConfig::from_raw(&mut raw, dir, data.as_deref())?;
                // A fit file may carry the scenario it was generated from.
                if raw.has("geometry") {
                    Scenario::from_raw(&mut raw)?;
                }
                strip_command_sections(&mut raw);
                raw.finish()?;
                Ok(run_fit(&cfg, &ctx)?.1)
            }
        }
    }
}
