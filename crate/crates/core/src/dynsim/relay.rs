use serde::{Deserialize, Serialize};

use super::SimError;
use crate::netcore::Network;
use crate::uflsopt::UflsPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySource {
    /// Frequency of the electrically nearest online machine.
    LocalBus,
    Coi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaySettings {
    pub deadband_steps: usize,
    pub delay_steps: usize,
    pub netgen_blocking: bool,
    pub frequency_source: FrequencySource,
}

impl Default for RelaySettings {
    /// 200 ms deadband and 100 ms breaker delay at a 10 ms step.
    fn default() -> Self {
        RelaySettings {
            deadband_steps: 20,
            delay_steps: 10,
            netgen_blocking: true,
            frequency_source: FrequencySource::LocalBus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayBank {
    pub plan: UflsPlan,
    pub settings: RelaySettings,
}

impl RelayBank {
    pub fn new(plan: UflsPlan, settings: RelaySettings) -> Result<Self, SimError> {
        if settings.deadband_steps == 0 {
            return Err(SimError::InvalidRelay("deadband_steps must be at least 1".into()));
        }
        for w in plan.stages.windows(2) {
            if !(w[1].threshold_hz < w[0].threshold_hz) {
                return Err(SimError::InvalidRelay(format!(
                    "thresholds must strictly decrease ({} then {})",
                    w[0].threshold_hz, w[1].threshold_hz
                )));
            }
        }
        Ok(RelayBank { plan, settings })
    }

    /// A bank with no stages.
    pub fn none() -> Self {
        RelayBank {
            plan: UflsPlan::default(),
            settings: RelaySettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayPhase {
    Armed { count: usize },
    Pending { effective_step: usize },
    Applied,
    Blocked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayUnit {
    pub stage: usize,
    pub bus: usize,
    pub fraction: f64,
    pub threshold_hz: f64,
    pub phase: RelayPhase,
}

/// Mutable relay state for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayState {
    pub units: Vec<RelayUnit>,
    fractions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayTrip {
    pub stage: usize,
    pub bus: usize,
    pub fraction: f64,
    pub blocked: bool,
}

impl RelayState {
    pub fn new(bank: &RelayBank, net: &Network) -> Result<Self, SimError> {
        let mut units = Vec::new();
        for (stage, s) in bank.plan.stages.iter().enumerate() {
            for (&id, &f) in &s.fractions {
                let bus = net
                    .bus_index(id)
                    .ok_or_else(|| SimError::InvalidRelay(format!("plan references unknown bus {id}")))?;
                if f > 0.0 {
                    units.push(RelayUnit {
                        stage,
                        bus,
                        fraction: f,
                        threshold_hz: s.threshold_hz,
                        phase: RelayPhase::Armed { count: 0 },
                    });
                }
            }
        }
        Ok(RelayState {
            units,
            fractions: vec![vec![0.0; net.n_bus()]; bank.plan.stages.len()],
        })
    }

    /// Applied shed fraction per stage and bus.
    pub fn fractions(&self) -> &[Vec<f64>] {
        &self.fractions
    }

    pub fn bus_total(&self, bus: usize) -> f64 {
        self.fractions.iter().map(|s| s[bus]).sum()
    }
}

/// Advances every relay with the measurements of step `step` and resolves
/// the trips that take effect at step `step + 1`.
///
/// A relay starts a trip once its signal has been below threshold for
/// `deadband_steps` consecutive steps; the shed acts `delay_steps` later.
/// With net-gen blocking a relay whose bus injects net power at trip time
/// latches without shedding.
pub fn relay_step(
    bank: &RelayBank,
    freq_hz: &[f64],
    bus_net_injection: &[f64],
    state: &mut RelayState,
    step: usize,
) -> Vec<RelayTrip> {
    let s = &bank.settings;
    let mut trips = Vec::new();
    for unit in &mut state.units {
        if let RelayPhase::Armed { count } = unit.phase {
            let count = if freq_hz[unit.bus] < unit.threshold_hz { count + 1 } else { 0 };
            unit.phase = if count >= s.deadband_steps {
                RelayPhase::Pending {
                    effective_step: step + 1 + s.delay_steps,
                }
            } else {
                RelayPhase::Armed { count }
            };
        }
        if let RelayPhase::Pending { effective_step } = unit.phase {
            if effective_step <= step + 1 {
                let blocked = s.netgen_blocking && bus_net_injection[unit.bus] >= 0.0;
                unit.phase = if blocked { RelayPhase::Blocked } else { RelayPhase::Applied };
                if !blocked {
                    state.fractions[unit.stage][unit.bus] += unit.fraction;
                }
                trips.push(RelayTrip {
                    stage: unit.stage,
                    bus: unit.bus,
                    fraction: unit.fraction,
                    blocked,
                });
            }
        }
    }
    trips
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::fixtures::two_bus;
    use crate::uflsopt::PlanStage;
    use std::collections::BTreeMap;

    fn bank(kdb: usize, d: usize, blocking: bool) -> (RelayBank, Network) {
        let net = two_bus(1.0, 0.2, 0.01);
        let plan = UflsPlan {
            stages: vec![PlanStage {
                threshold_hz: 59.5,
                fractions: BTreeMap::from([(2, 0.1)]),
            }],
        };
        let settings = RelaySettings {
            deadband_steps: kdb,
            delay_steps: d,
            netgen_blocking: blocking,
            frequency_source: FrequencySource::Coi,
        };
        (RelayBank::new(plan, settings).unwrap(), net)
    }

    fn run(bank: &RelayBank, net: &Network, freq: &[f64], inj: f64) -> Vec<Option<usize>> {
        let mut state = RelayState::new(bank, net).unwrap();
        let mut applied_from = vec![None];
        for (n, &f) in freq.iter().enumerate() {
            for t in relay_step(bank, &[f, f], &[0.0, inj], &mut state, n) {
                if !t.blocked {
                    applied_from[0] = Some(n + 1);
                }
            }
        }
        applied_from
    }

    #[test]
    fn deadband_minus_one_does_not_trip() {
        let (b, net) = bank(4, 2, false);
        let freq = [59.4, 59.4, 59.4, 59.6, 59.4, 59.4, 59.4, 60.0, 60.0, 60.0, 60.0];
        assert_eq!(run(&b, &net, &freq, -1.0), vec![None]);
    }

    #[test]
    fn exact_deadband_trips_after_delay() {
        let (b, net) = bank(4, 2, false);
        let freq = [60.0, 59.4, 59.4, 59.4, 59.4, 60.0, 60.0, 60.0, 60.0, 60.0];
        // Fourth low sample at step 4; shed effective at step 4 + 1 + 2.
        assert_eq!(run(&b, &net, &freq, -1.0), vec![Some(7)]);
    }

    #[test]
    fn backfeeding_bus_is_blocked() {
        let (b, net) = bank(2, 0, true);
        let freq = [59.0; 6];
        assert_eq!(run(&b, &net, &freq, 0.3), vec![None]);
        assert_eq!(run(&b, &net, &freq, -0.3), vec![Some(2)]);
    }

    #[test]
    fn stage_trips_once() {
        let (b, net) = bank(1, 0, false);
        let mut state = RelayState::new(&b, &net).unwrap();
        let mut total = 0;
        for n in 0..10 {
            total += relay_step(&b, &[59.0, 59.0], &[0.0, -1.0], &mut state, n).len();
        }
        assert_eq!(total, 1);
        assert_eq!(state.fractions()[0][1], 0.1);
    }
}
