//! End-to-end runs: scenario variants, optimize-then-validate per scheme,
//! disturbance sweeps, periodic re-optimization over snapshots and the
//! comparison tables built from their artifacts.

mod config;
mod criteria;
mod periods;
mod pipeline;
mod report;
mod sweep;
mod variants;

pub use config::{RunConfig, Scheme};
pub use criteria::{criteria_met, NADIR_MIN_HZ, SETTLING_MAX_HZ, SETTLING_MIN_HZ};
pub use periods::{equilibrium_unchanged, run_periods, PeriodResult};
pub use pipeline::{cmd_pipeline, design_plan, run_scheme, validate_plan, Designed, SchemeRun, Validation};
pub use report::{cmd_report, ComparisonReport, ComparisonRow, REPORT_FILE};
pub use sweep::{cmd_sweep, imbalance_scenario, sample_imbalances, write_sweep_csv, SweepRow};
pub use variants::{cmd_scenario_variants, der_variant, half_inertia, DER_SHARE};

use thiserror::Error;

use crate::dynsim::SimError;
use crate::netcore::{NetworkError, PowerFlowError};
use crate::reduce::ReduceError;
use crate::uflsopt::{OptError, PlanError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: String, reason: String },
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}
