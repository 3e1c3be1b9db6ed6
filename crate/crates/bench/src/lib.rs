//! Experiment harness for the `zomd` solvers: TOML configs, multi-trial
//! execution, summary statistics and CSV/JSON outputs.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{Algorithm, ExperimentConfig, Point, Prepared};
pub use error::{BenchError, Result};
pub use runner::{run_experiment, run_point, run_trial, Outcome};
pub use stats::{fit_power_law, fit_rate, quantile, quantile_report, PowerFit, SummaryRow};

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out: Option<std::path::PathBuf>,
    pub checkpoint_ratio: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            config.run.seed = s;
        }
        if let Some(t) = self.trials {
            config.run.trials = t;
        }
        if let Some(o) = &self.out {
            config.output.dir = o.clone();
        }
        if let Some(r) = self.checkpoint_ratio {
            config.run.checkpoint_ratio = r;
        }
    }
}
