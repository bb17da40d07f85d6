use super::{SimError, Trajectory};
use crate::netcore::Network;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub nadir_hz: f64,
    /// Mean CoI frequency over the final second.
    pub settling_hz: f64,
    pub total_shed_pct: f64,
}

/// Inertia-weighted mean frequency of the online machines, Hz.
pub fn coi_frequency(traj: &Trajectory, net: &Network) -> Vec<f64> {
    let w0 = net.omega0();
    traj.states
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, g) in net.generators.iter().enumerate() {
                if traj.is_online(i, n) {
                    num += g.m * s.omega_dev[i];
                    den += g.m;
                }
            }
            let dev = if den > 0.0 { num / den } else { 0.0 };
            net.nominal_hz * (1.0 + dev / w0)
        })
        .collect()
}

pub fn metrics(traj: &Trajectory) -> Result<Metrics, SimError> {
    let horizon = traj.horizon();
    if horizon < 15.0 - 1e-9 {
        return Err(SimError::HorizonTooShort(horizon));
    }
    let nadir_hz = traj.coi_hz.iter().copied().fold(f64::INFINITY, f64::min);
    let tail = (1.0 / traj.dt).round() as usize + 1;
    let window = &traj.coi_hz[traj.len() - tail.min(traj.len())..];
    let settling_hz = window.iter().sum::<f64>() / window.len() as f64;
    let shed = traj.shed_pu.last().copied().unwrap_or(0.0);
    let total_shed_pct = if traj.base_demand > 0.0 {
        100.0 * shed / traj.base_demand
    } else {
        0.0
    };
    Ok(Metrics {
        nadir_hz,
        settling_hz,
        total_shed_pct,
    })
}
