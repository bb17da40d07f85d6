//! Designs a two-stage shedding plan for a 25% load step on the 3-bus case,
//! then checks it against the exhaustive grid search.

use ufls::dynsim::{DisturbanceScenario, Event, EventKind};
use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ufls::uflsopt::{brute_force_oracle, optimize, HighsBackend, ModelKind, OracleGrid, UflsInstance, UflsOptConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/data/three_bus.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let scen = DisturbanceScenario::new(vec![Event {
        t: 0.0,
        kind: EventKind::ScaleLoad { bus: 3, factor: 1.25 },
    }])?;
    let cfg = UflsOptConfig {
        n_stages: 2,
        horizon_s: 10.0,
        ..UflsOptConfig::with_dt(0.1)
    };
    let inst = UflsInstance::new(&net, &sol, &scen, &cfg, ModelKind::Safr)?;
    let out = optimize(&inst, &cfg, &HighsBackend::default())?;
    println!(
        "{:?} after {:.2} s: {} rows, {} columns, {} binaries",
        out.solution.status,
        out.total_time_s,
        out.milp.model.constraints.len(),
        out.milp.model.variables.len(),
        out.milp.model.n_binary()
    );
    if let Some(plan) = &out.plan {
        print!("{}", plan.to_json());
        println!("designed shed {:.4} pu", plan.designed_shed(&net));
    }
    let oracle = brute_force_oracle(&inst, &cfg, &OracleGrid::default())?;
    println!("grid search over {} plans: best {:.4} pu", oracle.evaluations, oracle.objective);
    Ok(())
}
