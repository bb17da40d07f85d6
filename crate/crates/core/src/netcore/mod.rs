//! Static grid model: buses, branches, classical machines with governors,
//! voltage-dependent ZIP loads, the bus admittance matrix and the AC power
//! flow that anchors every dynamic model built on top of it.

mod admittance;
mod io;
mod machine;
pub(crate) mod powerflow;
mod zip;

pub use admittance::{build_admittance, AdmittanceMatrix};
pub use io::{load_network, network_from_json, network_to_json, save_network};
pub use machine::{compute_internal_emf, machine_injection, MachineInit};
pub use powerflow::{solve_power_flow, PowerFlowSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use zip::{derive_zip_params, ZipLoad};

use std::collections::VecDeque;
use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {record}: {reason}")]
    Invariant { record: String, reason: String },
    #[error("network is not connected: bus {0} unreachable from bus {1}")]
    Disconnected(u32, u32),
}

impl NetworkError {
    fn invariant(record: impl Into<String>, reason: impl Into<String>) -> Self {
        NetworkError::Invariant {
            record: record.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PowerFlowError {
    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e} p.u.)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("singular power-flow Jacobian at iteration {0}")]
    SingularJacobian(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("non-positive voltage {v} at bus {bus}")]
    NonPositiveVoltage { bus: u32, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    pub kind: BusKind,
    /// Voltage magnitude setpoint for slack/PV buses, flat-start value otherwise.
    pub v_nominal: f64,
    pub theta_init: f64,
    pub p_demand_0: f64,
    pub q_demand_0: f64,
    /// Constant-current share of the load.
    pub zip_a: f64,
    /// Constant-admittance share of the load.
    pub zip_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split evenly between both ends.
    pub b_shunt: f64,
}

impl Branch {
    pub fn series_admittance(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.r, self.x).inv()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GovernorParams {
    /// Droop, per unit of frequency per unit of power on the system base.
    pub r: f64,
    pub t: f64,
    pub p_m_ref: f64,
    pub p_m_min: f64,
    pub p_m_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub bus: u32,
    /// Inertia constant `M = 2H` in seconds on the system base.
    pub m: f64,
    /// Damping in per unit of power per unit of frequency deviation.
    pub d: f64,
    pub x_d_prime: f64,
    pub p_dispatch: f64,
    pub q_dispatch: f64,
    pub governor: GovernorParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub nominal_hz: f64,
    /// Sorted by bus id after validation.
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<GeneratorParams>,
}

impl Network {
    /// Validates every invariant and returns the network with buses sorted by id.
    pub fn new(
        base_mva: f64,
        nominal_hz: f64,
        mut buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<GeneratorParams>,
    ) -> Result<Self, NetworkError> {
        buses.sort_by_key(|b| b.id);
        let net = Network {
            base_mva,
            nominal_hz,
            buses,
            branches,
            generators,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_gen(&self) -> usize {
        self.generators.len()
    }

    /// Nominal angular frequency in rad/s.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.nominal_hz
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.binary_search_by_key(&id, |b| b.id).ok()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated network has a slack bus")
    }

    /// Bus index of every generator, in generator order.
    pub fn gen_bus_indices(&self) -> Vec<usize> {
        self.generators
            .iter()
            .map(|g| self.bus_index(g.bus).expect("validated generator bus"))
            .collect()
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.p_demand_0).sum()
    }

    pub fn total_inertia(&self) -> f64 {
        self.generators.iter().map(|g| g.m).sum()
    }

    /// Copy of the network with the listed generators removed. Indices refer
    /// to positions in `generators`.
    pub fn without_generators(&self, removed: &[usize]) -> Network {
        let mut out = self.clone();
        out.generators = self
            .generators
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, g)| g.clone())
            .collect();
        out
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if !(self.base_mva > 0.0) {
            return Err(NetworkError::invariant("network", "base_mva must be positive"));
        }
        if !(self.nominal_hz > 0.0) {
            return Err(NetworkError::invariant("network", "nominal_hz must be positive"));
        }
        if self.buses.is_empty() {
            return Err(NetworkError::invariant("network", "no buses"));
        }
        for w in self.buses.windows(2) {
            if w[0].id == w[1].id {
                return Err(NetworkError::invariant(
                    format!("bus {}", w[0].id),
                    "duplicate bus id",
                ));
            }
        }
        let n_slack = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if n_slack != 1 {
            return Err(NetworkError::invariant(
                "network",
                format!("expected exactly one slack bus, found {n_slack}"),
            ));
        }
        for b in &self.buses {
            let rec = || format!("bus {}", b.id);
            let finite = [b.v_nominal, b.theta_init, b.p_demand_0, b.q_demand_0, b.zip_a, b.zip_b];
            if finite.iter().any(|v| !v.is_finite()) {
                return Err(NetworkError::invariant(rec(), "non-finite field"));
            }
            if b.zip_a < 0.0 || b.zip_b < 0.0 {
                return Err(NetworkError::invariant(rec(), "ZIP fractions must be non-negative"));
            }
            if b.zip_a + b.zip_b > 1.0 + 1e-12 {
                return Err(NetworkError::invariant(
                    rec(),
                    format!("zip_a + zip_b = {} exceeds 1", b.zip_a + b.zip_b),
                ));
            }
            if !(b.v_nominal > 0.0) {
                return Err(NetworkError::invariant(rec(), "voltage setpoint must be positive"));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            let rec = || format!("branch {k} ({} -> {})", br.from, br.to);
            if br.from == br.to {
                return Err(NetworkError::invariant(rec(), "from and to buses coincide"));
            }
            if self.bus_index(br.from).is_none() || self.bus_index(br.to).is_none() {
                return Err(NetworkError::invariant(rec(), "unknown bus id"));
            }
            let y = br.series_admittance();
            if !(br.r.is_finite() && br.x.is_finite() && br.b_shunt.is_finite())
                || !(y.re.is_finite() && y.im.is_finite())
                || y.norm() == 0.0
            {
                return Err(NetworkError::invariant(rec(), "admittance must be finite and nonzero"));
            }
        }
        let mut t_common: Option<f64> = None;
        for (k, g) in self.generators.iter().enumerate() {
            let rec = || format!("generator {k} (bus {})", g.bus);
            if self.bus_index(g.bus).is_none() {
                return Err(NetworkError::invariant(rec(), "unknown bus id"));
            }
            if !(g.m > 0.0) {
                return Err(NetworkError::invariant(rec(), "inertia m must be positive"));
            }
            if !(g.x_d_prime > 0.0) {
                return Err(NetworkError::invariant(rec(), "transient reactance must be positive"));
            }
            if !(g.d >= 0.0) {
                return Err(NetworkError::invariant(rec(), "damping must be non-negative"));
            }
            let gov = &g.governor;
            if !(gov.r > 0.0) || !(gov.t > 0.0) {
                return Err(NetworkError::invariant(rec(), "governor r and t must be positive"));
            }
            if !(gov.p_m_min <= gov.p_m_ref && gov.p_m_ref <= gov.p_m_max) {
                return Err(NetworkError::invariant(
                    rec(),
                    format!(
                        "governor limits [{}, {}] do not bracket reference {}",
                        gov.p_m_min, gov.p_m_max, gov.p_m_ref
                    ),
                ));
            }
            match t_common {
                None => t_common = Some(gov.t),
                Some(t) if (t - gov.t).abs() > 1e-12 => {
                    return Err(NetworkError::invariant(
                        rec(),
                        format!("governor time constant {} differs from {}", gov.t, t),
                    ))
                }
                _ => {}
            }
        }
        for b in &self.buses {
            if b.kind != BusKind::Pq && !self.generators.iter().any(|g| g.bus == b.id) {
                return Err(NetworkError::invariant(
                    format!("bus {}", b.id),
                    "slack/PV bus without a generator",
                ));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        let n = self.n_bus();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.bus_index(br.from).unwrap(), self.bus_index(br.to).unwrap());
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(NetworkError::Disconnected(self.buses[i].id, self.buses[0].id)),
            None => Ok(()),
        }
    }

    /// Hop distance from every bus to every other bus over the branch graph.
    pub fn hop_distances(&self, from: usize) -> Vec<usize> {
        let n = self.n_bus();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.bus_index(br.from).unwrap(), self.bus_index(br.to).unwrap());
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut dist = vec![usize::MAX; n];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        dist
    }
}
