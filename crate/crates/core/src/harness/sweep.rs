use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criteria::criteria_met;
use super::pipeline::validate_plan;
use super::{io_err, HarnessError};
use crate::dynsim::{DisturbanceScenario, Event, EventKind, ScenarioFile};
use crate::netcore::{Network, PowerFlowSolution};
use crate::uflsopt::UflsPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub imbalance_pct: f64,
    pub nadir_hz: f64,
    pub settling_hz: f64,
    pub shed_pct: f64,
    pub criteria_met: bool,
}

/// Loss of `imbalance_pct` % of the total demand at time `t`: generator
/// `gen` trips and whatever part of its output exceeds the imbalance is
/// restored at its bus as a constant injection.
pub fn imbalance_scenario(
    net: &Network,
    sol: &PowerFlowSolution,
    gen: usize,
    imbalance_pct: f64,
    t: f64,
) -> Result<DisturbanceScenario, HarnessError> {
    if gen >= net.n_gen() {
        return Err(HarnessError::Config(format!("generator {gen} does not exist")));
    }
    let lost = imbalance_pct / 100.0 * net.total_demand();
    let output = sol.gen_p[gen];
    if !(lost >= 0.0) || lost > output + 1e-9 {
        return Err(HarnessError::Config(format!(
            "imbalance {imbalance_pct}% ({lost:.4} p.u.) is outside what generator {gen} supplies ({output:.4} p.u.)"
        )));
    }
    let mut events = vec![Event {
        t,
        kind: EventKind::TripGenerator { gen },
    }];
    let restored = output - lost;
    if restored.abs() > 1e-9 {
        events.push(Event {
            t,
            kind: EventKind::Inject {
                bus: net.generators[gen].bus,
                p: restored,
                q: sol.gen_q[gen] * restored / output,
            },
        });
    }
    Ok(DisturbanceScenario::new(events)?)
}

/// `n` imbalances drawn uniformly from `[lo_pct, hi_pct]`, sorted.
pub fn sample_imbalances(n: usize, lo_pct: f64, hi_pct: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<f64> = (0..n).map(|_| rng.random_range(lo_pct..=hi_pct)).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Replays the fixed `plan` for every imbalance. `base` supplies the
/// integration grid, the relays and the tripped generator and trip time
/// (its first generator trip).
pub fn cmd_sweep(
    net: &Network,
    sol: &PowerFlowSolution,
    plan: &UflsPlan,
    base: &ScenarioFile,
    imbalances_pct: &[f64],
) -> Result<Vec<SweepRow>, HarnessError> {
    let (gen, t) = base
        .scenario
        .events()
        .iter()
        .find_map(|e| match e.kind {
            EventKind::TripGenerator { gen } => Some((gen, e.t)),
            _ => None,
        })
        .ok_or_else(|| HarnessError::Config("sweep template has no generator trip".into()))?;
    imbalances_pct
        .par_iter()
        .map(|&pct| {
            let scen = ScenarioFile {
                scenario: imbalance_scenario(net, sol, gen, pct, t)?,
                ..base.clone()
            };
            let v = validate_plan(net, sol, &scen, plan)?;
            Ok(SweepRow {
                imbalance_pct: pct,
                nadir_hz: v.metrics.nadir_hz,
                settling_hz: v.metrics.settling_hz,
                shed_pct: v.metrics.total_shed_pct,
                criteria_met: criteria_met(v.metrics.nadir_hz, v.metrics.settling_hz),
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Artifact {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Artifact {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_reproducible_and_in_range() {
        let a = sample_imbalances(20, 5.0, 25.0, 7);
        assert_eq!(a, sample_imbalances(20, 5.0, 25.0, 7));
        assert_ne!(a, sample_imbalances(20, 5.0, 25.0, 8));
        assert!(a.iter().all(|x| (5.0..=25.0).contains(x)));
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }
}
