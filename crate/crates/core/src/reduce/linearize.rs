use nalgebra::{DMatrix, DVector};

use super::ReduceError;
use crate::dynsim::DaeSystem;
use crate::netcore::{Network, PowerFlowSolution};

/// `Δẋ = A_x Δx + A_y Δy`, `K_x Δx + K_y Δy = Δu`, where `Δu` stacks net
/// active then reactive injection changes per bus.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedDae {
    pub a_x: DMatrix<f64>,
    pub a_y: DMatrix<f64>,
    pub k_x: DMatrix<f64>,
    pub k_y: DMatrix<f64>,
    pub x0: DVector<f64>,
    pub y0: DVector<f64>,
    pub omega0: f64,
    pub bus_ids: Vec<u32>,
}

impl LinearizedDae {
    pub fn n_gen(&self) -> usize {
        self.a_x.nrows() / 3
    }

    pub fn n_bus(&self) -> usize {
        self.k_y.nrows() / 2
    }
}

pub fn linearize(net: &Network, sol: &PowerFlowSolution) -> Result<LinearizedDae, ReduceError> {
    if let Some(k) = sol.v.iter().position(|v| !(*v > 0.0)) {
        return Err(ReduceError::ZeroVoltage(net.buses[k].id));
    }
    let (sys, x0, y0) = DaeSystem::at_equilibrium(net, sol)?;
    let (a_x, a_y, k_x, k_y) = sys.jacobians(&x0, &y0);
    Ok(LinearizedDae {
        a_x,
        a_y,
        k_x,
        k_y,
        x0,
        y0,
        omega0: net.omega0(),
        bus_ids: net.buses.iter().map(|b| b.id).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{fixtures::two_bus, solve_power_flow};

    #[test]
    fn governor_rows_read_off_droop_and_time_constant() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        let lin = linearize(&net, &sol).unwrap();
        let g = &net.generators[0].governor;
        assert!((lin.a_x[(2, 1)] + 1.0 / (g.r * g.t)).abs() < 1e-12);
        assert!((lin.a_x[(2, 2)] + 1.0 / g.t).abs() < 1e-12);
    }

    #[test]
    fn constant_power_loads_add_no_voltage_sensitivity() {
        let mut net = two_bus(0.9, 0.3, 0.02);
        net.buses[1].zip_a = 0.0;
        net.buses[1].zip_b = 0.0;
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        let lin = linearize(&net, &sol).unwrap();
        let mut zip = net.clone();
        zip.buses[1].zip_b = 0.5;
        let lin_zip = linearize(&zip, &sol).unwrap();
        // Only the load bus V column of the P and Q rows changes.
        let diff = &lin_zip.k_y - &lin.k_y;
        assert!((diff[(1, 3)] - 2.0 * 0.5 * 0.9 / sol.v[1]).abs() < 1e-12);
        let mut rest = diff.clone();
        rest[(1, 3)] = 0.0;
        rest[(3, 3)] = 0.0;
        assert_eq!(rest.amax(), 0.0);
    }
}
