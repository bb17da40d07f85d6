//! Mixed-integer design of UFLS setpoints over the discretized reduced
//! model, with solver backends, solution audits and a brute-force oracle.

mod audit;
mod config;
mod extract;
mod formulation;
mod model;
mod mps;
mod oracle;
mod plan;
mod solve;
mod warmstart;

pub use audit::{
    audit_big_m, audit_envelope_dominance, audit_saturation, audit_solution, audit_threshold_consistency,
    audit_trigger_once, AuditReport,
};
pub use config::{steps_for, UflsOptConfig};
pub use extract::{envelope_frequencies, extract_plan, fix_plan, shed_schedule, FRACTION_EPS};
pub use formulation::{
    assemble, build_dynamics, fix_inactive_clamps, fix_pre_shed_window, no_shed_frequency, OMEGA_BOX, build_frequency_limits, build_governor_saturation, build_overshed_and_separation,
    build_shed_envelopes, build_threshold_logic, declare_variables, expected_counts, EnvelopeVars, ModelKind,
    ShedEnvelope, StageVars, UflsInstance, UflsLayout, UflsMilp,
};
pub use model::{Constraint, MilpModel, Sense, VarKind, Variable};
pub use mps::{column_name, export_mps, format_number, row_name, write_mps, OBJECTIVE_ROW};
pub use oracle::{brute_force_oracle, replay_plan, replay_with_voltages, EnvelopeReplay, OracleGrid, OracleResult};
pub use plan::{PlanError, PlanStage, UflsPlan};
#[cfg(feature = "highs")]
pub use solve::{solve_mps_file, HighsBackend};
pub use solve::{
    default_backend, read_solution_file, solve, solve_with_start, write_solution_file, MilpSolution, SolveLimits,
    SolveStatus, SolverBackend, SubprocessBackend, FEASIBILITY_TOL,
};
pub use warmstart::{assignment_from_plan, heuristic_plan, improve_start, polish, PlanPoint};

use thiserror::Error;

use crate::netcore::NetworkError;
use crate::reduce::ReduceError;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver backend: {0}")]
    Backend(String),
    #[error("no solver backend available; build with the `highs` feature or pass a command")]
    NoBackend,
    #[error("feasibility audit failed: {0}")]
    AuditFailed(String),
    #[error("solution status is {0:?} and carries no feasible point")]
    NoPoint(SolveStatus),
    #[error("oracle would evaluate {0} plans, above its budget")]
    OracleBudget(u64),
}

impl UflsOptConfig {
    pub fn limits(&self) -> SolveLimits {
        SolveLimits {
            time_limit_s: self.time_limit_s,
            mip_rel_gap: self.mip_rel_gap,
        }
    }
}

/// Result of [`optimize`].
#[derive(Debug, Clone)]
pub struct Optimized {
    pub milp: UflsMilp,
    pub solution: MilpSolution,
    /// Present when the backend returned a feasible point, optimal or not;
    /// check `solution.status` before treating the plan as optimal.
    pub plan: Option<UflsPlan>,
    pub audit: Option<AuditReport>,
    /// Whether a heuristic plan was handed to the backend as an incumbent.
    pub warm_started: bool,
    /// Wall time of the whole design: assembly, start search and solve.
    pub total_time_s: f64,
}

/// Share of the time limit the start search may use.
const START_SEARCH_SHARE: f64 = 0.2;

/// Assemble, build a starting point from the heuristic plan improved by
/// [`improve_start`], solve, and extract and audit the best point found.
pub fn optimize(inst: &UflsInstance, cfg: &UflsOptConfig, backend: &dyn SolverBackend) -> Result<Optimized, OptError> {
    let clock = std::time::Instant::now();
    let milp = assemble(inst, cfg)?;
    let start = match heuristic_plan(inst, cfg) {
        Some(point) => {
            let budget = START_SEARCH_SHARE * cfg.time_limit_s - clock.elapsed().as_secs_f64();
            let improved = improve_start(&milp, inst, backend, &cfg.limits(), &point, budget);
            match improved {
                Some(x) => Some(x),
                None => Some(assignment_from_plan(&milp, inst, &point)?),
            }
        }
        None => None,
    }
    .filter(|x| milp.model.max_violation(x).0 <= 1e-7);
    let limits = SolveLimits {
        time_limit_s: (cfg.time_limit_s - clock.elapsed().as_secs_f64()).max(1.0),
        ..cfg.limits()
    };
    let solution = solve_with_start(&milp.model, backend, &limits, start.as_deref())?;
    let (plan, audit) = if !solution.values.is_empty() {
        (Some(extract_plan(&milp, &solution)?), Some(audit_solution(&milp, &solution)))
    } else {
        (None, None)
    };
    Ok(Optimized {
        milp,
        solution,
        plan,
        audit,
        warm_started: start.is_some(),
        total_time_s: clock.elapsed().as_secs_f64(),
    })
}
