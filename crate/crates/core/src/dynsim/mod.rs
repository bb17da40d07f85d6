//! Nonlinear time-domain simulation of the full network DAE with governor
//! saturation, UFLS relays and scripted disturbances.

mod dae;
mod metrics;
mod relay;
mod scenario;
mod sim;
mod static_plan;

pub use dae::DaeSystem;
pub use metrics::{coi_frequency, metrics, Metrics};
pub use relay::{
    relay_step, FrequencySource, RelayBank, RelayPhase, RelaySettings, RelayState, RelayTrip,
    RelayUnit,
};
pub use scenario::{DisturbanceScenario, Event, EventKind, ScenarioFile};
pub use sim::{simulate, DynamicState, Trajectory, ALG_TOL};
pub use static_plan::make_static_plan;

use thiserror::Error;

use crate::netcore::NetworkError;

pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid relay configuration: {0}")]
    InvalidRelay(String),
    #[error("time step and horizon must be positive (dt = {dt}, horizon = {horizon})")]
    InvalidGrid { dt: f64, horizon: f64 },
    #[error("algebraic network solve diverged at step {step} (residual {residual:.3e}); possible voltage collapse")]
    AlgebraicDivergence { step: usize, residual: f64 },
    #[error("generator {gen} starts outside its governor limits (P_m = {p_m:.6})")]
    OutsideGovernorLimits { gen: usize, p_m: f64 },
    #[error("horizon {0:.3} s is shorter than the 15 s needed for settling metrics")]
    HorizonTooShort(f64),
    #[error("no sheddable load in the network")]
    NoLoad,
}
