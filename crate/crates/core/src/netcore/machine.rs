use num_complex::Complex64;

use super::{Network, NetworkError, PowerFlowSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineInit {
    pub e_internal: f64,
    pub delta_0: f64,
}

/// Electrical power `(Pe, Qe)` delivered by a classical machine to its terminal bus.
pub fn machine_injection(e: f64, delta: f64, v: f64, theta: f64, x_d_prime: f64) -> (f64, f64) {
    let (s, c) = (delta - theta).sin_cos();
    (
        v * e * s / x_d_prime,
        (v * e * c - v * v) / x_d_prime,
    )
}

/// Internal EMF behind transient reactance reproducing each generator's
/// solved output at its terminal voltage.
pub fn compute_internal_emf(
    net: &Network,
    sol: &PowerFlowSolution,
) -> Result<Vec<MachineInit>, NetworkError> {
    net.generators
        .iter()
        .zip(net.gen_bus_indices())
        .enumerate()
        .map(|(k, (g, i))| {
            let v = Complex64::from_polar(sol.v[i], sol.theta[i]);
            if v.norm() == 0.0 {
                return Err(NetworkError::Invariant {
                    record: format!("generator {k}"),
                    reason: "zero terminal voltage".into(),
                });
            }
            let s = Complex64::new(sol.gen_p[k], sol.gen_q[k]);
            let current = (s / v).conj();
            let e = v + Complex64::new(0.0, g.x_d_prime) * current;
            Ok(MachineInit {
                e_internal: e.norm(),
                delta_0: e.arg(),
            })
        })
        .collect()
}
