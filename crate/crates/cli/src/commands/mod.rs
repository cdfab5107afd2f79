mod correlation;
mod fit;
mod spectrum;
mod sweep;
mod validate;

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::scenario::ModelChoice;

pub use correlation::run_correlation;
pub use fit::{run_fit, FitConfig};
pub use spectrum::{compute_spectra, run_spectrum, SpectrumOutput};
pub use sweep::{run_sweep, SweepAxis, SweepSpec};
pub use validate::{run_validate, ValidationReport};

/// Command-line settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub normalize: bool,
    pub model: Option<ModelChoice>,
}

impl RunContext {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunContext {
            out: out.into(),
            jobs: None,
            normalize: false,
            model: None,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Worker pool bounded by `--jobs`.
    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(CliError::config("--jobs must be at least 1"));
            }
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}
