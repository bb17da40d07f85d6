//! Solves the bundled 9-bus case and prints the bus voltages and generator outputs.

use ufls::netcore::{load_network, solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wscc9.json"))?;
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    println!("converged in {} iterations, mismatch {:.2e}", sol.iterations, sol.mismatch);
    println!("{:>4} {:>8} {:>9}", "bus", "V (pu)", "angle (°)");
    for (i, bus) in net.buses.iter().enumerate() {
        println!("{:>4} {:>8.4} {:>9.3}", bus.id, sol.v[i], sol.theta[i].to_degrees());
    }
    for (g, (p, q)) in net.generators.iter().zip(sol.gen_p.iter().zip(&sol.gen_q)) {
        println!("generator at bus {}: P {p:.4} pu, Q {q:.4} pu", g.bus);
    }
    Ok(())
}
