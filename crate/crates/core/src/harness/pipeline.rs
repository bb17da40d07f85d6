use std::path::Path;

use rayon::prelude::*;

use super::config::{RunConfig, Scheme};
use super::criteria::criteria_met;
use super::report::{cmd_report, ComparisonReport, ComparisonRow, REPORT_FILE};
use super::{io_err, HarnessError};
use crate::dynsim::{make_static_plan, metrics, simulate, DisturbanceScenario, Metrics, RelayBank, ScenarioFile, Trajectory};
use crate::netcore::{load_network, solve_power_flow, Network, PowerFlowSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::uflsopt::{
    export_mps, optimize, write_solution_file, ModelKind, Optimized, SolverBackend, UflsInstance, UflsOptConfig, UflsPlan,
};

/// A scheme's plan and how it was obtained.
#[derive(Debug, Clone)]
pub struct Designed {
    pub scheme: Scheme,
    /// `None` when the optimizer found no feasible plan.
    pub plan: Option<UflsPlan>,
    /// Optimizer wall time; `None` for the conventional scheme.
    pub solver_time_s: Option<f64>,
    pub optimized: Option<Optimized>,
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub trajectory: Trajectory,
    pub metrics: Metrics,
    pub criteria_met: bool,
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub designed: Designed,
    pub validation: Option<Validation>,
}

impl SchemeRun {
    pub fn row(&self, scenario: &str) -> ComparisonRow {
        ComparisonRow::new(
            scenario,
            self.designed.scheme,
            self.designed.solver_time_s,
            self.validation.as_ref().map(|v| &v.metrics),
        )
    }
}

/// Plan of one scheme for `scenario`: the MILP over the SAFR or SFR model,
/// or the conventional static design with `cfg.n_stages` stages.
pub fn design_plan(
    net: &Network,
    sol: &PowerFlowSolution,
    scenario: &DisturbanceScenario,
    scheme: Scheme,
    cfg: &UflsOptConfig,
    backend: &dyn SolverBackend,
) -> Result<Designed, HarnessError> {
    let kind = match scheme {
        Scheme::Conventional => {
            return Ok(Designed {
                scheme,
                plan: Some(make_static_plan(net, cfg.n_stages)?),
                solver_time_s: None,
                optimized: None,
            })
        }
        Scheme::Safr => ModelKind::Safr,
        Scheme::Sfr => ModelKind::Sfr,
    };
    let inst = UflsInstance::new(net, sol, scenario, cfg, kind)?;
    let opt = optimize(&inst, cfg, backend)?;
    Ok(Designed {
        scheme,
        plan: opt.plan.clone(),
        solver_time_s: Some(opt.total_time_s),
        optimized: Some(opt),
    })
}

/// Replays `plan` in the nonlinear simulator with the scenario's relays.
pub fn validate_plan(
    net: &Network,
    sol: &PowerFlowSolution,
    scen: &ScenarioFile,
    plan: &UflsPlan,
) -> Result<Validation, HarnessError> {
    let bank = RelayBank::new(plan.clone(), scen.relay.clone())?;
    let trajectory = simulate(net, sol, &scen.scenario, &bank, scen.dt, scen.horizon_s)?;
    let metrics = metrics(&trajectory)?;
    Ok(Validation {
        criteria_met: criteria_met(metrics.nadir_hz, metrics.settling_hz),
        trajectory,
        metrics,
    })
}

pub fn run_scheme(
    net: &Network,
    sol: &PowerFlowSolution,
    scen: &ScenarioFile,
    scheme: Scheme,
    cfg: &UflsOptConfig,
    backend: &dyn SolverBackend,
) -> Result<SchemeRun, HarnessError> {
    let designed = design_plan(net, sol, &scen.scenario, scheme, cfg, backend)?;
    let validation = designed
        .plan
        .as_ref()
        .map(|p| validate_plan(net, sol, scen, p))
        .transpose()?;
    Ok(SchemeRun { designed, validation })
}

fn write_artifacts(dir: &Path, run: &SchemeRun) -> Result<(), HarnessError> {
    if let Some(plan) = &run.designed.plan {
        plan.save(dir.join("plan.json"))?;
    }
    if let Some(opt) = &run.designed.optimized {
        let mps = dir.join("model.mps");
        export_mps(&opt.milp.model, &mps).map_err(io_err(&mps))?;
        let sol = dir.join("solution.txt");
        write_solution_file(&sol, &opt.solution).map_err(io_err(&sol))?;
    }
    if let Some(v) = &run.validation {
        let csv = dir.join("trajectory.csv");
        let file = std::fs::File::create(&csv).map_err(io_err(&csv))?;
        v.trajectory
            .write_csv(std::io::BufWriter::new(file))
            .map_err(io_err(&csv))?;
    }
    Ok(())
}

/// Runs every selected scheme on every scenario, scenarios concurrently.
/// Each scenario gets a directory named after its file with one
/// subdirectory per scheme and a `report.json`; the combined tables are
/// written at the top level. A scheme that errors leaves a `FAILED` file
/// next to whatever it wrote.
pub fn cmd_pipeline(cfg: &RunConfig, backend: &dyn SolverBackend) -> Result<ComparisonReport, HarnessError> {
    cfg.validate()?;
    let net = load_network(&cfg.network)?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    cfg.scenarios
        .par_iter()
        .map(|path| run_scenario(cfg, &net, &sol, path, backend))
        .collect::<Result<Vec<()>, _>>()?;
    cmd_report(&cfg.out_dir)
}

fn run_scenario(
    cfg: &RunConfig,
    net: &Network,
    sol: &PowerFlowSolution,
    path: &Path,
    backend: &dyn SolverBackend,
) -> Result<(), HarnessError> {
    let scen = ScenarioFile::load(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let dir = cfg.out_dir.join(&name);
    let mut report = ComparisonReport::default();
    for &scheme in &cfg.schemes {
        let sub = dir.join(scheme.as_str());
        std::fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        let run = run_scheme(net, sol, &scen, scheme, &cfg.optimizer, backend)
            .and_then(|run| write_artifacts(&sub, &run).map(|_| run));
        match run {
            Ok(run) => report.rows.push(run.row(&name)),
            Err(e) => {
                let marker = sub.join("FAILED");
                std::fs::write(&marker, format!("{e}\n")).map_err(io_err(&marker))?;
                return Err(e);
            }
        }
    }
    report.save(&dir.join(REPORT_FILE))
}
