use nalgebra::DMatrix;

use super::aggregate::aggregate_governors;
use super::{ReduceError, SafrModel};
use crate::netcore::Network;

/// Single-machine equivalent that ignores the network entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct SfrModel {
    pub m_sfr: f64,
    pub d_sfr: f64,
    pub r_agg: f64,
    pub t: f64,
    pub dp_max: f64,
    pub dp_min: f64,
    pub omega0: f64,
    pub bus_ids: Vec<u32>,
}

pub fn build_sfr(net: &Network) -> Result<SfrModel, ReduceError> {
    let governors: Vec<_> = net.generators.iter().map(|g| g.governor.clone()).collect();
    let pm0: Vec<f64> = governors.iter().map(|g| g.p_m_ref).collect();
    let (r_agg, t, dp_max, dp_min) = aggregate_governors(&governors, &pm0)?;
    Ok(SfrModel {
        m_sfr: net.total_inertia(),
        d_sfr: net.generators.iter().map(|g| g.d).sum(),
        r_agg,
        t,
        dp_max,
        dp_min,
        omega0: net.omega0(),
        bus_ids: net.buses.iter().map(|b| b.id).collect(),
    })
}

impl SfrModel {
    /// The same dynamics in reduced-model form: every active injection
    /// change acts directly on the aggregate swing equation, reactive
    /// injections have no effect.
    pub fn as_reduced(&self) -> SafrModel {
        let n = self.bus_ids.len();
        let a_r = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0,
                self.omega0,
                0.0,
                0.0,
                -self.d_sfr / self.m_sfr,
                1.0 / self.m_sfr,
                0.0,
                -1.0 / (self.r_agg * self.t),
                -1.0 / self.t,
            ],
        );
        let mut b_r = DMatrix::zeros(3, 2 * n);
        for k in 0..n {
            b_r[(1, k)] = 1.0 / self.m_sfr;
        }
        SafrModel {
            a_r,
            b_r,
            c_out: [0.0, 1.0, 0.0],
            omega0: self.omega0,
            m_a: self.m_sfr,
            r_agg: self.r_agg,
            t: self.t,
            dp_max: self.dp_max,
            dp_min: self.dp_min,
            bus_ids: self.bus_ids.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::fixtures::two_bus;

    #[test]
    fn sums_inertia_and_damping() {
        let mut net = two_bus(1.0, 0.2, 0.01);
        net.generators[0].m = 4.0;
        let mut g = net.generators[0].clone();
        g.m = 6.0;
        g.d = 2.5;
        net.generators.push(g);
        let sfr = build_sfr(&net).unwrap();
        assert_eq!(sfr.m_sfr, 10.0);
        assert_eq!(sfr.d_sfr, 3.5);
        assert!((sfr.r_agg - 0.025).abs() < 1e-15);
    }
}
