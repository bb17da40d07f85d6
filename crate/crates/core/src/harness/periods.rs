use std::path::PathBuf;

use super::HarnessError;
use crate::dynsim::DisturbanceScenario;
use crate::netcore::{load_network, solve_power_flow, Network, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::uflsopt::{optimize, ModelKind, SolverBackend, UflsInstance, UflsOptConfig, UflsPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodResult {
    pub period: usize,
    pub start_h: f64,
    pub snapshot: PathBuf,
    /// False when the snapshot matched the previous one and its plan was kept.
    pub reoptimized: bool,
    pub plan: Option<UflsPlan>,
    pub solver_time_s: Option<f64>,
}

/// Same network, hence the same equilibrium and reduced model.
pub fn equilibrium_unchanged(prev: &Network, next: &Network) -> bool {
    prev == next
}

/// Offline re-optimization loop: one period of `period_h` hours per
/// snapshot. Each period linearizes around the snapshot's equilibrium and
/// solves the shedding MILP for `scenario`, unless the snapshot is identical
/// to the previous one.
pub fn run_periods(
    snapshots: &[PathBuf],
    scenario: &DisturbanceScenario,
    cfg: &UflsOptConfig,
    period_h: f64,
    backend: &dyn SolverBackend,
) -> Result<Vec<PeriodResult>, HarnessError> {
    let mut out: Vec<PeriodResult> = Vec::new();
    let mut prev: Option<Network> = None;
    for (i, path) in snapshots.iter().enumerate() {
        let net = load_network(path)?;
        let start_h = i as f64 * period_h;
        if let (Some(p), Some(last)) = (&prev, out.last()) {
            if equilibrium_unchanged(p, &net) {
                out.push(PeriodResult {
                    period: i,
                    start_h,
                    snapshot: path.clone(),
                    reoptimized: false,
                    plan: last.plan.clone(),
                    solver_time_s: None,
                });
                continue;
            }
        }
        let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let inst = UflsInstance::new(&net, &sol, scenario, cfg, ModelKind::Safr)?;
        let opt = optimize(&inst, cfg, backend)?;
        out.push(PeriodResult {
            period: i,
            start_h,
            snapshot: path.clone(),
            reoptimized: true,
            plan: opt.plan,
            solver_time_s: Some(opt.total_time_s),
        });
        prev = Some(net);
    }
    Ok(out)
}
