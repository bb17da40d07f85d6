use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ufls::dynsim::{metrics, simulate, RelayBank, ScenarioFile};
use ufls::harness::{
    cmd_pipeline, cmd_report, cmd_scenario_variants, cmd_sweep, criteria_met, sample_imbalances, validate_plan,
    write_sweep_csv, RunConfig,
};
use ufls::netcore::{load_network, solve_power_flow, Network, PowerFlowSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ufls::reduce::{build_safr, build_sfr, discretize, dump_model, post_event_system};
use ufls::uflsopt::{
    default_backend, export_mps, optimize, write_solution_file, ModelKind, SolveStatus, SolverBackend, SubprocessBackend,
    UflsInstance, UflsOptConfig, UflsPlan,
};

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "ufls", version, about = "Under-frequency load-shedding design and validation")]
struct Cli {
    /// Directory for every file the command writes.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Safr,
    Sfr,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Safr => ModelKind::Safr,
            Model::Sfr => ModelKind::Sfr,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the AC power flow and write the operating point.
    Powerflow { network: PathBuf },
    /// Simulate a disturbance, optionally with a shedding plan in service.
    Simulate {
        network: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Build and discretize the reduced frequency model.
    Reduce {
        network: PathBuf,
        /// Reduce the post-event system of this scenario instead of the base case.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        dt_opt: f64,
        #[arg(long, value_enum, default_value = "safr")]
        model: Model,
    },
    /// Design shedding setpoints with the MILP.
    Optimize {
        network: PathBuf,
        scenario: PathBuf,
        /// Optimizer settings as JSON; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dt_opt: Option<f64>,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, value_enum, default_value = "safr")]
        model: Model,
        /// `highs`, or a command template with `{mps}` and `{sol}` placeholders.
        #[arg(long, default_value = "highs")]
        solver: String,
    },
    /// Replay a plan in the nonlinear simulator and check the design criteria.
    Validate {
        network: PathBuf,
        plan: PathBuf,
        scenario: PathBuf,
    },
    /// Replay a fixed plan over a range of generation-loss imbalances.
    Sweep {
        network: PathBuf,
        plan: PathBuf,
        /// Supplies the tripped generator, trip time, grid and relays.
        scenario: PathBuf,
        /// Explicit imbalances in percent of demand; otherwise sampled.
        #[arg(long, value_delimiter = ',')]
        imbalances: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 5.0)]
        min_pct: f64,
        #[arg(long, default_value_t = 25.0)]
        max_pct: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tabulate every report below a results directory.
    Report { dir: PathBuf },
    /// Run the full design and validation pipeline from a run configuration.
    Pipeline {
        config: PathBuf,
        #[arg(long, default_value = "highs")]
        solver: String,
    },
    /// Write the base, half-inertia and DER variants of a network.
    Variants { network: PathBuf },
    #[command(hide = true)]
    SolveMps {
        mps: PathBuf,
        sol: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1e-4)]
        gap: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> AnyResult<()> {
    std::fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()).into())
}

fn operating_point(path: &Path) -> AnyResult<(Network, PowerFlowSolution)> {
    let net = load_network(path)?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok((net, sol))
}

fn backend(spec: &str) -> AnyResult<Box<dyn SolverBackend>> {
    if spec == "highs" {
        return default_backend().ok_or_else(|| "built without the highs feature; pass a solver command".into());
    }
    Ok(Box::new(SubprocessBackend::new(spec)))
}

fn run(cli: &Cli) -> AnyResult<bool> {
    let out = &cli.out;
    std::fs::create_dir_all(out).map_err(|e| format!("creating {}: {e}", out.display()))?;
    match &cli.cmd {
        Cmd::Powerflow { network } => {
            let (net, sol) = operating_point(network)?;
            let buses: Vec<_> = net
                .buses
                .iter()
                .zip(sol.v.iter().zip(&sol.theta))
                .map(|(b, (v, th))| json!({"id": b.id, "v": v, "theta": th}))
                .collect();
            let doc = json!({
                "iterations": sol.iterations,
                "mismatch": sol.mismatch,
                "buses": buses,
                "gen_p": sol.gen_p,
                "gen_q": sol.gen_q,
            });
            write(&out.join("powerflow.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            println!("converged in {} iterations, mismatch {:.3e}", sol.iterations, sol.mismatch);
            Ok(true)
        }
        Cmd::Simulate { network, scenario, plan } => {
            let (net, sol) = operating_point(network)?;
            let scen = ScenarioFile::load(scenario)?;
            let bank = match plan {
                Some(p) => RelayBank::new(UflsPlan::load(p)?, scen.relay.clone())?,
                None => RelayBank::none(),
            };
            let traj = simulate(&net, &sol, &scen.scenario, &bank, scen.dt, scen.horizon_s)?;
            let path = out.join("trajectory.csv");
            let file = std::fs::File::create(&path).map_err(|e| format!("writing {}: {e}", path.display()))?;
            traj.write_csv(std::io::BufWriter::new(file))?;
            let m = metrics(&traj)?;
            report_metrics(out, m.nadir_hz, m.settling_hz, m.total_shed_pct)
        }
        Cmd::Reduce {
            network,
            scenario,
            dt_opt,
            model,
        } => {
            let (net, sol) = operating_point(network)?;
            let (net, sol) = match scenario {
                Some(s) => {
                    let post = post_event_system(&net, &sol, &ScenarioFile::load(s)?.scenario)?;
                    (post.net, post.sol)
                }
                None => (net, sol),
            };
            let reduced = match model {
                Model::Safr => build_safr(&net, &sol)?,
                Model::Sfr => build_sfr(&net)?.as_reduced(),
            };
            let disc = discretize(&reduced, *dt_opt)?;
            write(&out.join("reduced.json"), dump_model(&reduced, &disc))?;
            println!("reduced model over {} buses at dt {dt_opt}", disc.n_bus());
            Ok(true)
        }
        Cmd::Optimize {
            network,
            scenario,
            config,
            dt_opt,
            stages,
            time_limit,
            model,
            solver,
        } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => UflsOptConfig::default(),
            };
            if let Some(dt) = dt_opt {
                cfg = UflsOptConfig {
                    dt_opt: *dt,
                    deadband_steps: UflsOptConfig::with_dt(*dt).deadband_steps,
                    delay_steps: UflsOptConfig::with_dt(*dt).delay_steps,
                    ..cfg
                };
            }
            if let Some(n) = stages {
                cfg.n_stages = *n;
            }
            if let Some(t) = time_limit {
                cfg.time_limit_s = *t;
            }
            let (net, sol) = operating_point(network)?;
            let scen = ScenarioFile::load(scenario)?;
            let inst = UflsInstance::new(&net, &sol, &scen.scenario, &cfg, (*model).into())?;
            let opt = optimize(&inst, &cfg, backend(solver)?.as_ref())?;
            export_mps(&opt.milp.model, out.join("model.mps"))?;
            write_solution_file(out.join("solution.txt"), &opt.solution)?;
            println!(
                "status {:?}, objective {:.6}, {:.1} s",
                opt.solution.status, opt.solution.objective, opt.total_time_s
            );
            let Some(plan) = &opt.plan else {
                println!("no feasible plan");
                return Ok(false);
            };
            plan.save(out.join("plan.json"))?;
            if let Some(audit) = opt.audit.as_ref().filter(|a| !a.passed()) {
                for issue in &audit.issues {
                    eprintln!("audit: {issue}");
                }
            }
            if opt.solution.status != SolveStatus::Optimal {
                eprintln!("plan is the best point found, not proven optimal");
            }
            Ok(true)
        }
        Cmd::Validate {
            network,
            plan,
            scenario,
        } => {
            let (net, sol) = operating_point(network)?;
            let scen = ScenarioFile::load(scenario)?;
            let v = validate_plan(&net, &sol, &scen, &UflsPlan::load(plan)?)?;
            let path = out.join("trajectory.csv");
            let file = std::fs::File::create(&path).map_err(|e| format!("writing {}: {e}", path.display()))?;
            v.trajectory.write_csv(std::io::BufWriter::new(file))?;
            report_metrics(out, v.metrics.nadir_hz, v.metrics.settling_hz, v.metrics.total_shed_pct)
        }
        Cmd::Sweep {
            network,
            plan,
            scenario,
            imbalances,
            count,
            min_pct,
            max_pct,
            seed,
        } => {
            let (net, sol) = operating_point(network)?;
            let scen = ScenarioFile::load(scenario)?;
            let levels = if imbalances.is_empty() {
                sample_imbalances(*count, *min_pct, *max_pct, *seed)
            } else {
                imbalances.clone()
            };
            let rows = cmd_sweep(&net, &sol, &UflsPlan::load(plan)?, &scen, &levels)?;
            write_sweep_csv(&rows, &out.join("sweep.csv"))?;
            let met = rows.iter().filter(|r| r.criteria_met).count();
            println!("{met} of {} imbalances meet the criteria", rows.len());
            Ok(met == rows.len())
        }
        Cmd::Report { dir } => {
            let report = cmd_report(dir)?;
            write(&out.join("summary.md"), report.to_markdown())?;
            write(&out.join("summary.csv"), report.to_csv())?;
            print!("{}", report.to_markdown());
            Ok(report.all_met())
        }
        Cmd::Pipeline { config, solver } => {
            let mut cfg = RunConfig::load(config)?;
            cfg.out_dir = out.clone();
            let report = cmd_pipeline(&cfg, backend(solver)?.as_ref())?;
            print!("{}", report.to_markdown());
            Ok(report.all_met())
        }
        Cmd::Variants { network } => {
            cmd_scenario_variants(network, out)?;
            println!("wrote base, half-inertia and DER variants to {}", out.display());
            Ok(true)
        }
        Cmd::SolveMps { mps, sol, time_limit, gap } => solve_mps(mps, sol, *time_limit, *gap),
    }
}

#[cfg(feature = "highs")]
fn solve_mps(mps: &Path, sol: &Path, time_limit_s: f64, mip_rel_gap: f64) -> AnyResult<bool> {
    let limits = ufls::uflsopt::SolveLimits {
        time_limit_s,
        mip_rel_gap,
    };
    ufls::uflsopt::solve_mps_file(mps, sol, &limits)?;
    Ok(true)
}

#[cfg(not(feature = "highs"))]
fn solve_mps(_: &Path, _: &Path, _: f64, _: f64) -> AnyResult<bool> {
    Err("built without the highs feature".into())
}

fn report_metrics(out: &Path, nadir_hz: f64, settling_hz: f64, shed_pct: f64) -> AnyResult<bool> {
    let met = criteria_met(nadir_hz, settling_hz);
    let doc = json!({
        "nadir_hz": nadir_hz,
        "settling_hz": settling_hz,
        "shed_pct": shed_pct,
        "criteria_met": met,
    });
    write(&out.join("metrics.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
    println!("nadir {nadir_hz:.3} Hz, settling {settling_hz:.3} Hz, shed {shed_pct:.2}%, criteria met: {met}");
    Ok(met)
}
