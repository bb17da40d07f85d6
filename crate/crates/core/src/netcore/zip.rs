use super::{Network, NetworkError, PowerFlowSolution};

/// Voltage-dependent load `P(V) = P_P + I_P·V + Y_P·V²` with the same form for Q.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZipLoad {
    pub p_const: f64,
    pub i_const_p: f64,
    pub y_const_p: f64,
    pub q_const: f64,
    pub i_const_q: f64,
    pub y_const_q: f64,
}

impl ZipLoad {
    pub fn p_at(&self, v: f64) -> f64 {
        self.p_const + self.i_const_p * v + self.y_const_p * v * v
    }

    pub fn q_at(&self, v: f64) -> f64 {
        self.q_const + self.i_const_q * v + self.y_const_q * v * v
    }

    pub fn dp_dv(&self, v: f64) -> f64 {
        self.i_const_p + 2.0 * self.y_const_p * v
    }

    pub fn dq_dv(&self, v: f64) -> f64 {
        self.i_const_q + 2.0 * self.y_const_q * v
    }

    /// Every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ZipLoad {
        ZipLoad {
            p_const: self.p_const * factor,
            i_const_p: self.i_const_p * factor,
            y_const_p: self.y_const_p * factor,
            q_const: self.q_const * factor,
            i_const_q: self.i_const_q * factor,
            y_const_q: self.y_const_q * factor,
        }
    }

    /// Constant-power load with the given demand.
    pub fn constant_power(p: f64, q: f64) -> ZipLoad {
        ZipLoad {
            p_const: p,
            q_const: q,
            ..ZipLoad::default()
        }
    }
}

pub fn derive_zip_params(
    net: &Network,
    sol: &PowerFlowSolution,
) -> Result<Vec<ZipLoad>, NetworkError> {
    net.buses
        .iter()
        .zip(&sol.v)
        .map(|(bus, &v0)| {
            let loaded = bus.p_demand_0 != 0.0 || bus.q_demand_0 != 0.0;
            if !loaded {
                return Ok(ZipLoad::default());
            }
            if !(v0 > 0.0) {
                return Err(NetworkError::Invariant {
                    record: format!("bus {}", bus.id),
                    reason: format!("non-positive solved voltage {v0} at a load bus"),
                });
            }
            let (a, b) = (bus.zip_a, bus.zip_b);
            let z = 1.0 - a - b;
            Ok(ZipLoad {
                p_const: z * bus.p_demand_0,
                i_const_p: a * bus.p_demand_0 / v0,
                y_const_p: b * bus.p_demand_0 / (v0 * v0),
                q_const: z * bus.q_demand_0,
                i_const_q: a * bus.q_demand_0 / v0,
                y_const_q: b * bus.q_demand_0 / (v0 * v0),
            })
        })
        .collect()
}
