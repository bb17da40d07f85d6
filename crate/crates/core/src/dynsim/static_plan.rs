use std::collections::BTreeMap;

use super::SimError;
use crate::netcore::Network;
use crate::uflsopt::{PlanStage, UflsPlan};

/// Conventional plan: thresholds from 59.5 Hz down in 0.2 Hz steps, each
/// stage shedding the same fraction at every load bus so that all stages
/// together shed 25 % of the load.
pub fn make_static_plan(net: &Network, stages: usize) -> Result<UflsPlan, SimError> {
    if stages == 0 {
        return Err(SimError::InvalidRelay("a plan needs at least one stage".into()));
    }
    let load_buses: Vec<u32> = net
        .buses
        .iter()
        .filter(|b| b.p_demand_0 > 0.0)
        .map(|b| b.id)
        .collect();
    if load_buses.is_empty() {
        return Err(SimError::NoLoad);
    }
    let fraction = 0.25 / stages as f64;
    Ok(UflsPlan {
        stages: (0..stages)
            .map(|i| PlanStage {
                threshold_hz: 59.5 - 0.2 * i as f64,
                fractions: load_buses.iter().map(|&id| (id, fraction)).collect::<BTreeMap<_, _>>(),
            })
            .collect(),
    })
}
