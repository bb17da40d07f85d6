//! Holds the conventional 9-bus plan fixed and replays generation losses
//! between 5% and 25% of demand.

use ufls::dynsim::{make_static_plan, ScenarioFile};
use ufls::harness::{cmd_sweep, sample_imbalances};
use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let net = load_network(format!("{dir}/data/wscc9.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let base = ScenarioFile::load(format!("{dir}/data/scenarios/wscc9_g3_trip.json"))?;
    let plan = make_static_plan(&net, 4)?;
    let rows = cmd_sweep(&net, &sol, &plan, &base, &sample_imbalances(8, 5.0, 25.0, 0))?;
    println!("{:>10} {:>9} {:>9} {:>7} {:>4}", "imbalance", "nadir", "settling", "shed", "ok");
    for r in rows {
        println!(
            "{:>9.2}% {:>9.3} {:>9.3} {:>6.2}% {:>4}",
            r.imbalance_pct, r.nadir_hz, r.settling_hz, r.shed_pct, r.criteria_met
        );
    }
    Ok(())
}
