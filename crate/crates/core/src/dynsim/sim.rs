use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::relay::{relay_step, FrequencySource, RelayBank, RelayState, RelayTrip};
use super::scenario::{DisturbanceScenario, EventKind};
use super::{DaeSystem, SimError};
use crate::netcore::{Network, PowerFlowSolution, ZipLoad};

/// Acceptance tolerance of the algebraic network residual at every step.
pub const ALG_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-10;
const MAX_INNER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub delta: Vec<f64>,
    /// Rotor speed deviation, rad/s.
    pub omega_dev: Vec<f64>,
    pub p_m: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub nominal_hz: f64,
    pub bus_ids: Vec<u32>,
    pub states: Vec<DynamicState>,
    /// Applied shed fraction per step, stage and bus.
    pub stage_shed: Vec<Vec<Vec<f64>>>,
    /// Cumulative shed active power per step, p.u.
    pub shed_pu: Vec<f64>,
    pub coi_hz: Vec<f64>,
    /// Pre-event total active demand, p.u.
    pub base_demand: f64,
    /// Step at which each generator was tripped, if it was.
    pub trip_steps: Vec<Option<usize>>,
    /// Every relay operation with the step at which it took effect.
    pub relay_events: Vec<(usize, RelayTrip)>,
    /// Largest algebraic residual over all accepted steps.
    pub max_residual: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn is_online(&self, gen: usize, step: usize) -> bool {
        self.trip_steps[gen].map_or(true, |s| step < s)
    }

    /// Writes `t,coi_hz,shed_pu,v_<bus>...,f_<gen>...`; tripped machines are NaN.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        let ng = self.trip_steps.len();
        let mut header = String::from("t,coi_hz,shed_pu");
        for id in &self.bus_ids {
            header += &format!(",v_{id}");
        }
        for g in 0..ng {
            header += &format!(",f_{g}");
        }
        writeln!(out, "{header}")?;
        let w0 = 2.0 * std::f64::consts::PI * self.nominal_hz;
        for (n, s) in self.states.iter().enumerate() {
            let mut line = format!("{:.4},{:.6},{:.6}", self.time(n), self.coi_hz[n], self.shed_pu[n]);
            for v in &s.v {
                line += &format!(",{v:.6}");
            }
            for g in 0..ng {
                if self.is_online(g, n) {
                    line += &format!(",{:.6}", self.nominal_hz * (1.0 + s.omega_dev[g] / w0));
                } else {
                    line += ",NaN";
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

struct Runner<'a> {
    net: &'a Network,
    sys: DaeSystem,
    base_loads: Vec<ZipLoad>,
    load_scale: Vec<f64>,
    pmin: Vec<f64>,
    pmax: Vec<f64>,
    hops: Vec<Vec<usize>>,
    nearest: Vec<usize>,
}

impl Runner<'_> {
    fn refresh_loads(&mut self, relays: &RelayState) {
        for k in 0..self.sys.n_bus() {
            let keep = (1.0 - relays.bus_total(k)).max(0.0);
            self.sys.loads[k] = self.base_loads[k].scaled(self.load_scale[k] * keep);
        }
    }

    fn refresh_nearest(&mut self) {
        let ng = self.sys.n_gen();
        self.nearest = (0..self.sys.n_bus())
            .map(|b| {
                (0..ng)
                    .filter(|&i| self.sys.online[i])
                    .min_by_key(|&i| (self.hops[self.sys.gen_bus[i]][b], i))
                    .unwrap_or(0)
            })
            .collect();
    }

    fn coi_pu(&self, x: &DVector<f64>) -> f64 {
        let ng = self.sys.n_gen();
        let (mut num, mut den) = (0.0, 0.0);
        for i in (0..ng).filter(|&i| self.sys.online[i]) {
            num += self.sys.m[i] * x[ng + i];
            den += self.sys.m[i];
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    fn relay_inputs(&self, x: &DVector<f64>, y: &DVector<f64>, source: FrequencySource) -> (Vec<f64>, Vec<f64>) {
        let ng = self.sys.n_gen();
        let n = self.sys.n_bus();
        let f0 = self.net.nominal_hz;
        let freq = match source {
            FrequencySource::Coi => vec![f0 * (1.0 + self.coi_pu(x)); n],
            FrequencySource::LocalBus => (0..n).map(|b| f0 * (1.0 + x[ng + self.nearest[b]])).collect(),
        };
        let mut inj: Vec<f64> = (0..n).map(|b| -self.sys.loads[b].p_at(y[n + b])).collect();
        for i in 0..ng {
            inj[self.sys.gen_bus[i]] += self.sys.machine_pq(i, x, y).0;
        }
        (freq, inj)
    }

    fn snapshot(&self, x: &DVector<f64>, y: &DVector<f64>) -> DynamicState {
        let ng = self.sys.n_gen();
        let n = self.sys.n_bus();
        DynamicState {
            delta: x.rows(0, ng).iter().copied().collect(),
            omega_dev: x.rows(ng, ng).iter().map(|w| w * self.sys.omega0).collect(),
            p_m: x.rows(2 * ng, ng).iter().copied().collect(),
            theta: y.rows(0, n).iter().copied().collect(),
            v: y.rows(n, n).iter().copied().collect(),
        }
    }

    /// One trapezoidal step solved jointly with the network equations.
    /// One trapezoidal step. A governor that would leave its limits is held
    /// at the limit inside the step rather than clipped afterwards.
    fn advance(&self, x: &DVector<f64>, y: &DVector<f64>, dt: f64) -> Result<(DVector<f64>, DVector<f64>), f64> {
        let ng = self.sys.n_gen();
        let mut held: Vec<Option<f64>> = vec![None; ng];
        loop {
            let (x1, y1) = self.newton_step(x, y, dt, &held)?;
            let mut changed = false;
            for i in 0..ng {
                let pm = x1[2 * ng + i];
                if held[i].is_none() && self.sys.online[i] {
                    let lim = if pm > self.pmax[i] + 1e-12 {
                        Some(self.pmax[i])
                    } else if pm < self.pmin[i] - 1e-12 {
                        Some(self.pmin[i])
                    } else {
                        None
                    };
                    if lim.is_some() {
                        held[i] = lim;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok((x1, y1));
            }
        }
    }

    fn newton_step(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        dt: f64,
        held: &[Option<f64>],
    ) -> Result<(DVector<f64>, DVector<f64>), f64> {
        let nx = x.len();
        let ny = y.len();
        let ng = self.sys.n_gen();
        let f0 = self.sys.f(x, y);
        let mut x1 = x + &f0 * dt;
        let mut y1 = y.clone();
        for (i, h) in held.iter().enumerate() {
            if let Some(lim) = h {
                x1[2 * ng + i] = *lim;
            }
        }
        let mut worst = f64::INFINITY;
        for _ in 0..=MAX_INNER {
            let mut r1 = &x1 - x - (&f0 + self.sys.f(&x1, &y1)) * (dt / 2.0);
            for (i, h) in held.iter().enumerate() {
                if let Some(lim) = h {
                    r1[2 * ng + i] = x1[2 * ng + i] - lim;
                }
            }
            let r2 = self.sys.g(&x1, &y1);
            worst = r1.amax().max(r2.amax());
            if worst <= NEWTON_TOL {
                break;
            }
            let (fx, fy, gx, gy) = self.sys.jacobians(&x1, &y1);
            let mut jac = DMatrix::zeros(nx + ny, nx + ny);
            jac.view_mut((0, 0), (nx, nx))
                .copy_from(&(DMatrix::identity(nx, nx) - fx * (dt / 2.0)));
            jac.view_mut((0, nx), (nx, ny)).copy_from(&(fy * (-dt / 2.0)));
            jac.view_mut((nx, 0), (ny, nx)).copy_from(&gx);
            jac.view_mut((nx, nx), (ny, ny)).copy_from(&gy);
            for (i, h) in held.iter().enumerate() {
                if h.is_some() {
                    let r = 2 * ng + i;
                    jac.row_mut(r).fill(0.0);
                    jac[(r, r)] = 1.0;
                }
            }
            let mut rhs = DVector::zeros(nx + ny);
            rhs.rows_mut(0, nx).copy_from(&r1);
            rhs.rows_mut(nx, ny).copy_from(&r2);
            let dz = jac.lu().solve(&rhs).ok_or(worst)?;
            x1 -= dz.rows(0, nx);
            y1 -= dz.rows(nx, ny);
        }
        if worst <= ALG_TOL {
            Ok((x1, y1))
        } else {
            Err(worst)
        }
    }
}

/// Integrates the network DAE from the power-flow equilibrium.
///
/// Events scheduled at `t` act at step `round(t/dt)`: the algebraic
/// equations are re-solved with the machine states held, and the recorded
/// snapshot for that step is the post-event one. Relay sheds take effect the
/// same way at the step they mature.
pub fn simulate(
    net: &Network,
    sol: &PowerFlowSolution,
    scenario: &DisturbanceScenario,
    relays: &RelayBank,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(SimError::InvalidGrid { dt, horizon });
    }
    scenario.check_targets(net)?;
    let steps = (horizon / dt).round() as usize;
    let ng = net.n_gen();
    let n = net.n_bus();

    let (mut sys, mut x, mut y) = DaeSystem::at_equilibrium(net, sol)?;
    sys.solve_algebraic(&x, &mut y, 1e-12, MAX_INNER)
        .map_err(|residual| SimError::AlgebraicDivergence { step: 0, residual })?;
    for i in 0..ng {
        let pe = sys.machine_pq(i, &x, &y).0;
        sys.p_ref[i] = pe;
        x[2 * ng + i] = pe;
        let gov = &net.generators[i].governor;
        if pe < gov.p_m_min - 1e-9 || pe > gov.p_m_max + 1e-9 {
            return Err(SimError::OutsideGovernorLimits { gen: i, p_m: pe });
        }
    }

    let mut run = Runner {
        net,
        base_loads: sys.loads.clone(),
        sys,
        load_scale: vec![1.0; n],
        pmin: net.generators.iter().map(|g| g.governor.p_m_min).collect(),
        pmax: net.generators.iter().map(|g| g.governor.p_m_max).collect(),
        hops: (0..n).map(|b| net.hop_distances(b)).collect(),
        nearest: Vec::new(),
    };
    run.refresh_nearest();
    let mut relay_state = RelayState::new(relays, net)?;

    let mut events_at: Vec<Vec<&EventKind>> = vec![Vec::new(); steps + 1];
    for e in scenario.events() {
        let s = (e.t / dt).round() as usize;
        if s <= steps {
            events_at[s].push(&e.kind);
        }
    }

    let mut traj = Trajectory {
        dt,
        nominal_hz: net.nominal_hz,
        bus_ids: net.buses.iter().map(|b| b.id).collect(),
        states: Vec::with_capacity(steps + 1),
        stage_shed: Vec::with_capacity(steps + 1),
        shed_pu: Vec::with_capacity(steps + 1),
        coi_hz: Vec::with_capacity(steps + 1),
        base_demand: net.total_demand(),
        trip_steps: vec![None; ng],
        relay_events: Vec::new(),
        max_residual: run.sys.g(&x, &y).amax(),
    };
    let mut shed_total = 0.0;

    let apply_events = |run: &mut Runner, step: usize, traj: &mut Trajectory| -> bool {
        let mut changed = false;
        for kind in &events_at[step] {
            changed = true;
            match **kind {
                EventKind::TripGenerator { gen } => {
                    if run.sys.online[gen] {
                        run.sys.online[gen] = false;
                        traj.trip_steps[gen] = Some(step);
                        run.refresh_nearest();
                    }
                }
                EventKind::ScaleLoad { bus, factor } => {
                    let b = net.bus_index(bus).expect("checked target");
                    run.load_scale[b] *= factor;
                }
                EventKind::Inject { bus, p, q } => {
                    let b = net.bus_index(bus).expect("checked target");
                    run.sys.extra_p[b] += p;
                    run.sys.extra_q[b] += q;
                }
            }
        }
        changed
    };

    let mut step = 0;
    loop {
        if apply_events(&mut run, step, &mut traj) {
            run.refresh_loads(&relay_state);
        }
        if step > 0 || !events_at[0].is_empty() {
            let res = run
                .sys
                .solve_algebraic(&x, &mut y, NEWTON_TOL, MAX_INNER)
                .or_else(|r| if r <= ALG_TOL { Ok(r) } else { Err(r) })
                .map_err(|residual| SimError::AlgebraicDivergence { step, residual })?;
            traj.max_residual = traj.max_residual.max(res);
        }
        traj.states.push(run.snapshot(&x, &y));
        traj.stage_shed.push(relay_state.fractions().to_vec());
        traj.shed_pu.push(shed_total);
        traj.coi_hz.push(net.nominal_hz * (1.0 + run.coi_pu(&x)));
        if step == steps {
            break;
        }

        let (freq, inj) = run.relay_inputs(&x, &y, relays.settings.frequency_source);
        let trips = relay_step(relays, &freq, &inj, &mut relay_state, step);
        let (x1, y1) = run
            .advance(&x, &y, dt)
            .map_err(|residual| SimError::AlgebraicDivergence { step: step + 1, residual })?;
        x = x1;
        y = y1;
        for i in 0..ng {
            x[2 * ng + i] = x[2 * ng + i].clamp(run.pmin[i], run.pmax[i]);
        }
        step += 1;
        if !trips.is_empty() {
            for t in &trips {
                if !t.blocked {
                    let load = run.base_loads[t.bus].scaled(run.load_scale[t.bus]);
                    shed_total += t.fraction * load.p_at(y[n + t.bus]);
                }
                traj.relay_events.push((step, *t));
            }
            run.refresh_loads(&relay_state);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsim::{Event, RelaySettings};
    use crate::netcore::{fixtures::two_bus, solve_power_flow};

    #[test]
    fn equilibrium_is_preserved() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        let traj = simulate(&net, &sol, &DisturbanceScenario::none(), &RelayBank::none(), 0.01, 2.0).unwrap();
        let first = &traj.states[0];
        for s in &traj.states {
            assert!(s.omega_dev[0].abs() <= 1e-9);
            assert!((s.delta[0] - first.delta[0]).abs() <= 1e-9);
            assert!((s.v[1] - first.v[1]).abs() <= 1e-9);
        }
        assert_eq!(traj.len(), 201);
    }

    #[test]
    fn load_step_pulls_frequency_down_and_clamps_governor() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        let scen = DisturbanceScenario::new(vec![Event {
            t: 0.5,
            kind: EventKind::Inject { bus: 2, p: -0.5, q: 0.0 },
        }])
        .unwrap();
        let traj = simulate(&net, &sol, &scen, &RelayBank::none(), 0.01, 5.0).unwrap();
        let pmax = net.generators[0].governor.p_m_max;
        assert!(traj.states.iter().all(|s| s.p_m[0] <= pmax));
        assert!(traj.states.last().unwrap().p_m[0] == pmax);
        assert!(traj.coi_hz[500] < 59.0);
        assert!(traj.max_residual <= ALG_TOL);
    }

    #[test]
    fn csv_marks_tripped_machines() {
        let mut net = two_bus(0.9, 0.3, 0.02);
        let mut g2 = net.generators[0].clone();
        g2.p_dispatch = 0.0;
        g2.governor.p_m_ref = 0.0;
        net.generators.push(g2);
        let sol = solve_power_flow(&net, 1e-10, 50).unwrap();
        let scen = DisturbanceScenario::new(vec![Event {
            t: 0.02,
            kind: EventKind::TripGenerator { gen: 1 },
        }])
        .unwrap();
        let bank = RelayBank::new(Default::default(), RelaySettings::default()).unwrap();
        let traj = simulate(&net, &sol, &scen, &bank, 0.01, 0.05).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,coi_hz,shed_pu,v_1,v_2,f_0,f_1");
        assert!(!lines[2].ends_with("NaN"));
        assert!(lines[3].ends_with("NaN"));
    }
}
