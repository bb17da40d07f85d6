//! Builds the 3-state SAFR and SFR models for a 10% generation loss on the
//! 9-bus case and compares their frequency responses.

use ufls::harness::imbalance_scenario;
use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ufls::reduce::{build_safr, build_sfr, discretize, post_event_system, simulate_reduced, SafrModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wscc9.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let scen = imbalance_scenario(&net, &sol, 2, 10.0, 0.0)?;
    let post = post_event_system(&net, &sol, &scen)?;

    let safr = build_safr(&post.net, &post.sol)?;
    let sfr = build_sfr(&post.net)?.as_reduced();
    println!("SAFR state matrix:{}", safr.a_r);
    println!("eigenvalues: {}", safr.a_r.complex_eigenvalues());

    let dt = 0.01;
    let u = vec![post.du.clone(); 2000];
    let hz = |w: f64| net.nominal_hz * (1.0 + w);
    let run = |m: &SafrModel| -> Result<Vec<f64>, Box<dyn std::error::Error>> {
        Ok(simulate_reduced(&discretize(m, dt)?, &u)?)
    };
    for (name, w) in [("SAFR", run(&safr)?), ("SFR", run(&sfr)?)] {
        let nadir = w.iter().copied().fold(f64::INFINITY, f64::min);
        println!("{name:>4}: nadir {:.3} Hz, frequency at 20 s {:.3} Hz", hz(nadir), hz(w[w.len() - 1]));
    }
    Ok(())
}
