//! Replays a plan file in the nonlinear simulator and checks the frequency
//! criteria. Without an argument the conventional 9-bus plan is used.
//!
//!     cargo run --example validate_plan -- path/to/plan.json

use ufls::dynsim::{make_static_plan, ScenarioFile};
use ufls::harness::{validate_plan, NADIR_MIN_HZ, SETTLING_MAX_HZ, SETTLING_MIN_HZ};
use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ufls::uflsopt::UflsPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let net = load_network(format!("{dir}/data/wscc9.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let scen = ScenarioFile::load(format!("{dir}/data/scenarios/wscc9_g3_trip.json"))?;
    let plan = match std::env::args().nth(1) {
        Some(path) => UflsPlan::load(path)?,
        None => make_static_plan(&net, 4)?,
    };
    let v = validate_plan(&net, &sol, &scen, &plan)?;
    println!("nadir    {:.3} Hz (limit {NADIR_MIN_HZ})", v.metrics.nadir_hz);
    println!("settling {:.3} Hz (band {SETTLING_MIN_HZ} to {SETTLING_MAX_HZ})", v.metrics.settling_hz);
    println!("shed     {:.2}% of demand", v.metrics.total_shed_pct);
    println!("criteria met: {}", v.criteria_met);
    Ok(())
}
