//! Linearization of the network DAE and its slow-coherency reduction to a
//! 3-state aggregate frequency model, plus the network-blind SFR baseline.

mod aggregate;
mod discrete;
mod linearize;
mod sfr;

pub use aggregate::{
    aggregate, build_transform, build_transform_with_reference, SafrModel,
    SlowCoherencyTransform, RCOND_MIN,
};
pub use discrete::{discretize, dump_model, simulate_reduced, simulate_reduced_states, DiscreteSafr};
pub use linearize::{linearize, LinearizedDae};
pub use sfr::{build_sfr, SfrModel};

use nalgebra::DVector;
use thiserror::Error;

use crate::dynsim::{DisturbanceScenario, EventKind};
use crate::netcore::{Network, NetworkError, PowerFlowSolution};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("zero voltage at bus {0}")]
    ZeroVoltage(u32),
    #[error("network has no generators")]
    NoGenerators,
    #[error("governor time constants differ ({0} vs {1}); aggregation needs a common value")]
    UnequalTimeConstants(f64, f64),
    #[error("algebraic Jacobian K_y is numerically singular (reciprocal condition {0:.3e})")]
    SingularKy(f64),
    #[error("I - dt/2 A is singular")]
    SingularDiscretization,
    #[error("time step must be positive, got {0}")]
    BadTimestep(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("event {0} cannot be represented in the reduced model")]
    UnsupportedEvent(String),
}

/// Reduced model of the post-event system together with the injection
/// change the event causes at the pre-event operating point.
#[derive(Debug, Clone)]
pub struct ReducedScenario {
    pub net: Network,
    pub sol: PowerFlowSolution,
    /// Net active then reactive injection change per bus, p.u.
    pub du: DVector<f64>,
}

/// Removes tripped machines and converts every event into a constant
/// injection change `Δu`. A trip removes the machine's pre-event output
/// from its bus.
pub fn post_event_system(
    net: &Network,
    sol: &PowerFlowSolution,
    scenario: &DisturbanceScenario,
) -> Result<ReducedScenario, ReduceError> {
    scenario
        .check_targets(net)
        .map_err(|e| ReduceError::UnsupportedEvent(e.to_string()))?;
    let n = net.n_bus();
    let mut du = DVector::zeros(2 * n);
    let gen_bus = net.gen_bus_indices();
    let mut tripped = Vec::new();
    for e in scenario.events() {
        match e.kind {
            EventKind::TripGenerator { gen } => {
                if !tripped.contains(&gen) {
                    tripped.push(gen);
                    du[gen_bus[gen]] -= sol.gen_p[gen];
                    du[n + gen_bus[gen]] -= sol.gen_q[gen];
                }
            }
            EventKind::ScaleLoad { bus, factor } => {
                let k = net.bus_index(bus).expect("checked target");
                du[k] -= (factor - 1.0) * net.buses[k].p_demand_0;
                du[n + k] -= (factor - 1.0) * net.buses[k].q_demand_0;
            }
            EventKind::Inject { bus, p, q } => {
                let k = net.bus_index(bus).expect("checked target");
                du[k] += p;
                du[n + k] += q;
            }
        }
    }
    if tripped.len() == net.n_gen() {
        return Err(ReduceError::NoGenerators);
    }
    Ok(ReducedScenario {
        net: net.without_generators(&tripped),
        sol: sol.without_generators(&tripped),
        du,
    })
}

/// Linearize, aggregate and eliminate the algebraic variables in one call.
pub fn build_safr(net: &Network, sol: &PowerFlowSolution) -> Result<SafrModel, ReduceError> {
    let lin = linearize(net, sol)?;
    let xf = build_transform(net)?;
    let governors: Vec<_> = net.generators.iter().map(|g| g.governor.clone()).collect();
    aggregate(&lin, &xf, &governors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsim::Event;
    use crate::netcore::{fixtures::two_bus, solve_power_flow};
    use nalgebra::DMatrix;

    fn twin(net: &Network) -> Network {
        let mut two = net.clone();
        let mut g = two.generators[0].clone();
        g.p_dispatch /= 2.0;
        g.governor.p_m_ref /= 2.0;
        g.governor.p_m_max /= 2.0;
        g.governor.r *= 2.0;
        two.generators[0] = g.clone();
        two.generators.push(g);
        two
    }

    #[test]
    fn single_machine_eigenvalues_match_characteristic_polynomial() {
        let mut net = two_bus(0.9, 0.3, 0.0);
        net.buses[1].zip_a = 0.0;
        net.buses[1].zip_b = 0.0;
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let safr = build_safr(&net, &sol).unwrap();
        let g = &net.generators[0];
        let (m, d, r, t) = (g.m, g.d, g.governor.r, g.governor.t);
        // Lossless, constant power: electrical output is pinned by the load,
        // leaving s·(m s + d)(T s + 1) + s/R = 0 with a root at the origin.
        let (a2, a1, a0) = (m * t, m + d * t, d + 1.0 / r);
        let disc = a1 * a1 - 4.0 * a2 * a0;
        let eig = safr.a_r.clone().complex_eigenvalues();
        if disc < 0.0 {
            let re = -a1 / (2.0 * a2);
            let im = (-disc).sqrt() / (2.0 * a2);
            let mut found = 0;
            for e in eig.iter() {
                if (e.re - re).abs() < 1e-8 && (e.im.abs() - im).abs() < 1e-8 {
                    found += 1;
                }
            }
            assert_eq!(found, 2, "{eig}");
        } else {
            for root in [(-a1 + disc.sqrt()) / (2.0 * a2), (-a1 - disc.sqrt()) / (2.0 * a2)] {
                assert!(eig.iter().any(|e| (e.re - root).abs() < 1e-8 && e.im.abs() < 1e-8));
            }
        }
        assert!(eig.iter().any(|e| e.norm() < 1e-8), "{eig}");
    }

    #[test]
    fn twin_machines_aggregate_to_one() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let one = build_safr(&net, &sol).unwrap();
        let mut two_net = twin(&net);
        two_net.generators[0].m = net.generators[0].m / 2.0;
        two_net.generators[1].m = net.generators[0].m / 2.0;
        two_net.generators[0].d = net.generators[0].d / 2.0;
        two_net.generators[1].d = net.generators[0].d / 2.0;
        two_net.generators[0].x_d_prime = net.generators[0].x_d_prime * 2.0;
        two_net.generators[1].x_d_prime = net.generators[0].x_d_prime * 2.0;
        let sol2 = solve_power_flow(&two_net, 1e-12, 50).unwrap();
        let two = build_safr(&two_net, &sol2).unwrap();
        assert!((&one.a_r - &two.a_r).amax() < 1e-8, "{} vs {}", one.a_r, two.a_r);
        assert!((&one.b_r - &two.b_r).amax() < 1e-8);
        assert!((one.dp_max - two.dp_max).abs() < 1e-12);
    }

    #[test]
    fn reference_choice_does_not_change_reduced_matrix() {
        let net = twin(&two_bus(0.9, 0.3, 0.02));
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let lin = linearize(&net, &sol).unwrap();
        let gov: Vec<_> = net.generators.iter().map(|g| g.governor.clone()).collect();
        let a = aggregate(&lin, &build_transform_with_reference(&net, 0).unwrap(), &gov).unwrap();
        let b = aggregate(&lin, &build_transform_with_reference(&net, 1).unwrap(), &gov).unwrap();
        assert!((&a.a_r - &b.a_r).amax() <= 1e-10);
    }

    #[test]
    fn delta_column_vanishes() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let safr = build_safr(&net, &sol).unwrap();
        assert!(safr.a_r.column(0).amax() < 1e-9);
        let _: &DMatrix<f64> = &safr.b_r;
    }

    #[test]
    fn trip_removes_machine_output() {
        let net = twin(&two_bus(0.9, 0.3, 0.02));
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let scen = DisturbanceScenario::new(vec![Event {
            t: 1.0,
            kind: EventKind::TripGenerator { gen: 1 },
        }])
        .unwrap();
        let post = post_event_system(&net, &sol, &scen).unwrap();
        assert_eq!(post.net.n_gen(), 1);
        assert!((post.du[0] + sol.gen_p[1]).abs() < 1e-15);
        assert!((post.du[2] + sol.gen_q[1]).abs() < 1e-15);
    }
}
