use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RelaySettings, SimError};
use crate::netcore::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Disconnects generator `gen` (index into the network's generator list).
    TripGenerator { gen: usize },
    /// Multiplies the load at `bus` by `factor`.
    ScaleLoad { bus: u32, factor: f64 },
    /// Adds a constant net injection at `bus` (positive = generation).
    Inject { bus: u32, p: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceScenario {
    events: Vec<Event>,
}

impl DisturbanceScenario {
    pub fn new(events: Vec<Event>) -> Result<Self, SimError> {
        for (k, e) in events.iter().enumerate() {
            if !(e.t >= 0.0) || !e.t.is_finite() {
                return Err(SimError::InvalidEvent(format!("event {k} has time {}", e.t)));
            }
        }
        if events.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(SimError::InvalidEvent("event times must be sorted".into()));
        }
        Ok(DisturbanceScenario { events })
    }

    pub fn none() -> Self {
        DisturbanceScenario::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Checks every event target against the network.
    pub fn check_targets(&self, net: &Network) -> Result<(), SimError> {
        for e in &self.events {
            match &e.kind {
                EventKind::TripGenerator { gen } if *gen >= net.n_gen() => {
                    return Err(SimError::InvalidEvent(format!("generator {gen} does not exist")))
                }
                EventKind::ScaleLoad { bus, factor } => {
                    if net.bus_index(*bus).is_none() {
                        return Err(SimError::InvalidEvent(format!("bus {bus} does not exist")));
                    }
                    if !(*factor >= 0.0) {
                        return Err(SimError::InvalidEvent(format!("load factor {factor} is negative")));
                    }
                }
                EventKind::Inject { bus, .. } if net.bus_index(*bus).is_none() => {
                    return Err(SimError::InvalidEvent(format!("bus {bus} does not exist")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Generators tripped by the scenario.
    pub fn tripped_generators(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::TripGenerator { gen } => Some(gen),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    dt: f64,
    horizon_s: f64,
    events: Vec<Event>,
    #[serde(default)]
    relay: Option<RelaySettings>,
}

/// A scenario document: disturbance script, integration grid and relay settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub dt: f64,
    pub horizon_s: f64,
    pub scenario: DisturbanceScenario,
    pub relay: RelaySettings,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let doc: ScenarioDoc =
            serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        if !(doc.dt > 0.0) || !(doc.horizon_s > 0.0) {
            return Err(SimError::InvalidScenario("dt and horizon_s must be positive".into()));
        }
        Ok(ScenarioFile {
            dt: doc.dt,
            horizon_s: doc.horizon_s,
            scenario: DisturbanceScenario::new(doc.events)?,
            relay: doc.relay.unwrap_or_default(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidScenario(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            dt: self.dt,
            horizon_s: self.horizon_s,
            events: self.scenario.events.clone(),
            relay: Some(self.relay.clone()),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes") + "\n"
    }
}
