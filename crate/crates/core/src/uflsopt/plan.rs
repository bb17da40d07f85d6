use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netcore::Network;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed plan document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid plan: {0}")]
    Invalid(String),
}

/// One UFLS stage: a frequency threshold and the fraction of each bus's
/// load it disconnects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStage {
    pub threshold_hz: f64,
    pub fractions: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UflsPlan {
    pub stages: Vec<PlanStage>,
}

impl UflsPlan {
    pub fn from_json(text: &str) -> Result<Self, PlanError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PlanError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PlanError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| PlanError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Pre-event demand shed by stage `i` if it trips everywhere, p.u.
    pub fn stage_designed_shed(&self, i: usize, net: &Network) -> f64 {
        self.stages[i]
            .fractions
            .iter()
            .map(|(id, f)| f * net.bus_index(*id).map_or(0.0, |k| net.buses[k].p_demand_0))
            .sum()
    }

    /// Pre-event demand shed if every stage trips, p.u.
    pub fn designed_shed(&self, net: &Network) -> f64 {
        (0..self.stages.len()).map(|i| self.stage_designed_shed(i, net)).sum()
    }

    pub fn total_fraction(&self, bus: u32) -> f64 {
        self.stages
            .iter()
            .filter_map(|s| s.fractions.get(&bus))
            .sum()
    }

    /// Checks ordering, separation, per-stage and per-bus shed limits.
    pub fn validate(&self, net: &Network, g_bar: f64, sep_hz: f64) -> Result<(), PlanError> {
        let eps = 1e-7;
        for w in self.stages.windows(2) {
            if !(w[1].threshold_hz <= w[0].threshold_hz - sep_hz + eps) {
                return Err(PlanError::Invalid(format!(
                    "thresholds {} and {} are not separated by {sep_hz} Hz",
                    w[0].threshold_hz, w[1].threshold_hz
                )));
            }
        }
        let total = net.total_demand();
        for (i, stage) in self.stages.iter().enumerate() {
            if !stage.threshold_hz.is_finite() {
                return Err(PlanError::Invalid(format!("stage {i} threshold is not finite")));
            }
            for (&bus, &f) in &stage.fractions {
                if net.bus_index(bus).is_none() {
                    return Err(PlanError::Invalid(format!("stage {i} references unknown bus {bus}")));
                }
                if !(-eps..=1.0 + eps).contains(&f) {
                    return Err(PlanError::Invalid(format!("stage {i} fraction {f} at bus {bus} outside [0, 1]")));
                }
            }
            let shed = self.stage_designed_shed(i, net);
            if shed > g_bar * total + eps {
                return Err(PlanError::Invalid(format!(
                    "stage {i} sheds {shed:.6} p.u., above {g_bar} of total demand {total:.6}"
                )));
            }
        }
        for bus in &net.buses {
            let f = self.total_fraction(bus.id);
            if f > 1.0 + eps {
                return Err(PlanError::Invalid(format!("bus {} sheds {f} of its load in total", bus.id)));
            }
        }
        Ok(())
    }

    /// True when no stage sheds anything.
    pub fn is_empty(&self) -> bool {
        self.stages.iter().all(|s| s.fractions.values().all(|f| *f <= 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::fixtures::two_bus;

    fn stage(th: f64, f: f64) -> PlanStage {
        PlanStage {
            threshold_hz: th,
            fractions: BTreeMap::from([(2, f)]),
        }
    }

    #[test]
    fn json_round_trip() {
        let plan = UflsPlan {
            stages: vec![stage(59.5, 0.05), stage(59.3, 0.07)],
        };
        let text = plan.to_json();
        assert!(text.contains("\"2\": 0.05"));
        assert_eq!(UflsPlan::from_json(&text).unwrap(), plan);
    }

    #[test]
    fn validation_limits() {
        let net = two_bus(1.0, 0.2, 0.01);
        let ok = UflsPlan {
            stages: vec![stage(59.5, 0.05), stage(59.3, 0.07)],
        };
        ok.validate(&net, 0.075, 0.2).unwrap();
        let close = UflsPlan {
            stages: vec![stage(59.5, 0.05), stage(59.4, 0.05)],
        };
        assert!(close.validate(&net, 0.075, 0.2).is_err());
        let big = UflsPlan {
            stages: vec![stage(59.5, 0.08)],
        };
        assert!(big.validate(&net, 0.075, 0.2).is_err());
    }
}
