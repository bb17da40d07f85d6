//! Frequency-dynamics modelling and under-frequency load-shedding (UFLS)
//! setpoint optimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`netcore`]: network data, admittance, AC power flow, ZIP loads.
//! - [`dynsim`]: nonlinear DAE simulator with governors and UFLS relays.
//! - [`reduce`]: linearization and slow-coherency aggregation to a 3-state
//!   frequency model, plus the classical SFR baseline.
//! - [`uflsopt`]: the UFLS mixed-integer program, solver backends and audits.
//! - [`harness`]: end-to-end pipeline, scenario variants, sweeps and reports.

pub mod netcore;
pub mod dynsim;
pub mod uflsopt;
pub mod reduce;
pub mod harness;
