//! Trips the third 9-bus generator with and without a conventional
//! four-stage shedding plan and compares the frequency response.

use ufls::dynsim::{make_static_plan, metrics, simulate, RelayBank, ScenarioFile};
use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let net = load_network(format!("{dir}/data/wscc9.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let scen = ScenarioFile::load(format!("{dir}/data/scenarios/wscc9_g3_trip.json"))?;

    let banks = [
        ("no shedding", RelayBank::none()),
        ("conventional", RelayBank::new(make_static_plan(&net, 4)?, scen.relay.clone())?),
    ];
    for (name, bank) in banks {
        let traj = simulate(&net, &sol, &scen.scenario, &bank, scen.dt, scen.horizon_s)?;
        let m = metrics(&traj)?;
        println!(
            "{name:>13}: nadir {:.3} Hz, settling {:.3} Hz, shed {:.2}% in {} relay operations",
            m.nadir_hz,
            m.settling_hz,
            m.total_shed_pct,
            traj.relay_events.len()
        );
    }
    Ok(())
}
