use nalgebra::DVector;

use super::config::UflsOptConfig;
use super::model::{MilpModel, Sense, VarKind};
use super::OptError;
use crate::dynsim::DisturbanceScenario;
use crate::netcore::{derive_zip_params, Network, PowerFlowSolution, ZipLoad};
use crate::reduce::{build_safr, build_sfr, discretize, post_event_system, DiscreteSafr};

const INF: f64 = f64::INFINITY;

/// Which reduced model the MILP is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Safr,
    Sfr,
}

/// Everything the formulation needs about one disturbance on one network.
#[derive(Debug, Clone)]
pub struct UflsInstance {
    pub model: DiscreteSafr,
    pub zip: Vec<ZipLoad>,
    pub p_demand_0: Vec<f64>,
    /// Net active then reactive injection change per bus caused by the event.
    pub du: DVector<f64>,
    pub nominal_hz: f64,
}

impl UflsInstance {
    pub fn new(
        net: &Network,
        sol: &PowerFlowSolution,
        scenario: &DisturbanceScenario,
        cfg: &UflsOptConfig,
        kind: ModelKind,
    ) -> Result<Self, OptError> {
        cfg.validate()?;
        let post = post_event_system(net, sol, scenario)?;
        let reduced = match kind {
            ModelKind::Safr => build_safr(&post.net, &post.sol)?,
            ModelKind::Sfr => build_sfr(&post.net)?.as_reduced(),
        };
        let zip = match kind {
            ModelKind::Safr => derive_zip_params(net, sol)?,
            ModelKind::Sfr => net
                .buses
                .iter()
                .map(|b| ZipLoad::constant_power(b.p_demand_0, b.q_demand_0))
                .collect(),
        };
        Ok(UflsInstance {
            model: discretize(&reduced, cfg.dt_opt)?,
            zip,
            p_demand_0: net.buses.iter().map(|b| b.p_demand_0).collect(),
            du: post.du,
            nominal_hz: net.nominal_hz,
        })
    }

    /// Buses with positive pre-event demand, the only ones that can shed.
    pub fn shed_buses(&self) -> Vec<usize> {
        (0..self.p_demand_0.len()).filter(|&b| self.p_demand_0[b] > 0.0).collect()
    }

    pub fn total_demand(&self) -> f64 {
        self.p_demand_0.iter().sum()
    }

    fn check(&self) -> Result<(), OptError> {
        let n = self.model.n_bus();
        let dims = [self.zip.len(), self.p_demand_0.len(), self.du.len() / 2, self.model.b_d.ncols() / 2];
        if dims.iter().any(|&d| d != n) || self.du.len() != 2 * n || self.model.a_d.shape() != (3, 3) {
            return Err(OptError::Dimension(format!(
                "{n} buses but zip {}, demand {}, du {}, b_d {:?}",
                dims[0],
                dims[1],
                self.du.len(),
                self.model.b_d.shape()
            )));
        }
        Ok(())
    }
}

/// Per-unit-of-`g` bounds on the power a shed disconnects at one bus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShedEnvelope {
    pub p_plus: f64,
    pub p_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
}

fn component_bounds(c0: f64, c1: f64, c2: f64, v_min: f64, v_max: f64) -> (f64, f64) {
    let (mut hi, mut lo) = (c0, c0);
    for (c, lo_v, hi_v) in [(c1, v_min, v_max), (c2, v_min * v_min, v_max * v_max)] {
        hi += (c * lo_v).max(c * hi_v);
        lo += (c * lo_v).min(c * hi_v);
    }
    (hi, lo)
}

/// Envelopes of `g·P(V)` and `g·Q(V)` over `V ∈ [v_min, v_max]`. Each ZIP
/// component takes whichever voltage bound maximizes (or minimizes) it, so
/// negative components swap roles.
pub fn build_shed_envelopes(zip: &[ZipLoad], cfg: &UflsOptConfig) -> Vec<ShedEnvelope> {
    zip.iter()
        .map(|z| {
            let (p_plus, p_minus) = component_bounds(z.p_const, z.i_const_p, z.y_const_p, cfg.v_min, cfg.v_max);
            let (q_plus, q_minus) = component_bounds(z.q_const, z.i_const_q, z.y_const_q, cfg.v_min, cfg.v_max);
            ShedEnvelope {
                p_plus,
                p_minus,
                q_plus,
                q_minus,
            }
        })
        .collect()
}

/// Column indices of one trajectory envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeVars {
    pub delta: Vec<usize>,
    pub omega: Vec<usize>,
    pub p_m: Vec<usize>,
    /// Governor state after the lower clamp.
    pub p_low: Vec<usize>,
    /// Fully clamped governor state.
    pub p_sat: Vec<usize>,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StageVars {
    pub threshold: usize,
    pub alpha: Vec<usize>,
    /// `g[slot][k]` for each shed bus slot, `k = 0..=K`.
    pub g: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct UflsLayout {
    pub k: usize,
    pub upper: EnvelopeVars,
    pub lower: EnvelopeVars,
    pub stages: Vec<StageVars>,
    /// Bus indices of the shed slots.
    pub shed_buses: Vec<usize>,
}

impl UflsLayout {
    pub fn envelopes(&self) -> [(&'static str, &EnvelopeVars); 2] {
        [("p", &self.upper), ("m", &self.lower)]
    }
}

/// An assembled instance: the model plus what is needed to read answers back.
#[derive(Debug, Clone)]
pub struct UflsMilp {
    pub model: MilpModel,
    pub layout: UflsLayout,
    pub cfg: UflsOptConfig,
    pub nominal_hz: f64,
    pub bus_ids: Vec<u32>,
    pub p_demand_0: Vec<f64>,
    pub dp_min: f64,
    pub dp_max: f64,
}

impl UflsMilp {
    pub fn hz_to_pu(&self, hz: f64) -> f64 {
        hz / self.nominal_hz - 1.0
    }

    pub fn pu_to_hz(&self, pu: f64) -> f64 {
        self.nominal_hz * (1.0 + pu)
    }
}

/// Closed-form sizes of the assembled model: `(columns, rows, binaries)`
/// for `n_s` stages, `n_b` shed buses, horizon `k` and deadband `k_db`.
///
/// columns = 6(K+1) + 12K + N_s·K + N_s + N_s·N_b·(K+1)
/// rows    = 36K + 2·N_s·K + N_s + N_s·N_b·K·(K_db+1) + 2(K+1) + 4 + 2·N_s + N_b − 1
/// binaries = N_s·K + 4K
pub fn expected_counts(n_s: usize, n_b: usize, k: usize, k_db: usize) -> (usize, usize, usize) {
    let cols = 6 * (k + 1) + 12 * k + n_s * k + n_s + n_s * n_b * (k + 1);
    let rows = 36 * k + 2 * n_s * k + n_s + n_s * n_b * k * (k_db + 1) + 2 * (k + 1) + 4 + 2 * n_s + n_b - 1 + n_s.saturating_sub(1) * k;
    (cols, rows, n_s * k + 4 * k)
}

/// Bound on every frequency deviation column, p.u. of nominal.
pub const OMEGA_BOX: f64 = 0.04;

fn declare_envelope(m: &mut MilpModel, tag: &str, k: usize) -> EnvelopeVars {
    let state = |m: &mut MilpModel, name: &str| -> Vec<usize> {
        let bound = if name == "omega" { OMEGA_BOX } else { INF };
        (0..=k)
            .map(|j| {
                let (lb, ub) = if j == 0 { (0.0, 0.0) } else { (-bound, bound) };
                m.add_var(format!("{name}_{tag}[{j}]"), VarKind::Continuous, lb, ub)
            })
            .collect()
    };
    let delta = state(m, "delta");
    let omega = state(m, "omega");
    let p_m = state(m, "pm");
    let mut step = |name: &str, kind: VarKind| -> Vec<usize> {
        (0..k)
            .map(|j| {
                let (lb, ub) = match kind {
                    VarKind::Binary => (0.0, 1.0),
                    VarKind::Continuous => (-INF, INF),
                };
                m.add_var(format!("{name}_{tag}[{j}]"), kind, lb, ub)
            })
            .collect()
    };
    EnvelopeVars {
        p_low: step("pml", VarKind::Continuous),
        p_sat: step("pmt", VarKind::Continuous),
        s: step("s", VarKind::Continuous),
        t: step("t", VarKind::Continuous),
        beta: step("beta", VarKind::Binary),
        gamma: step("gamma", VarKind::Binary),
        delta,
        omega,
        p_m,
    }
}

/// Declares every column in a fixed order: upper envelope, lower envelope,
/// then per stage its threshold, trigger binaries and shed fractions.
pub fn declare_variables(m: &mut MilpModel, cfg: &UflsOptConfig, shed_buses: &[usize], bus_ids: &[u32], nominal_hz: f64) -> UflsLayout {
    let k = cfg.k();
    let upper = declare_envelope(m, "p", k);
    let lower = declare_envelope(m, "m", k);
    let thr_lo = cfg.omega_shed_min_hz / nominal_hz - 1.0;
    let thr_hi = cfg.omega_shed_max_hz / nominal_hz - 1.0;
    let stages = (0..cfg.n_stages)
        .map(|i| {
            let threshold = m.add_var(format!("thr_{i}"), VarKind::Continuous, thr_lo, thr_hi);
            let alpha = (0..k)
                .map(|j| m.add_var(format!("alpha_{i}[{j}]"), VarKind::Binary, 0.0, 1.0))
                .collect();
            let g = shed_buses
                .iter()
                .map(|&b| {
                    (0..=k)
                        .map(|j| {
                            let ub = if j == 0 { 0.0 } else { 1.0 };
                            m.add_var(format!("g_{i}_{}[{j}]", bus_ids[b]), VarKind::Continuous, 0.0, ub)
                        })
                        .collect()
                })
                .collect();
            StageVars { threshold, alpha, g }
        })
        .collect();
    UflsLayout {
        k,
        upper,
        lower,
        stages,
        shed_buses: shed_buses.to_vec(),
    }
}

/// State change per step caused by a full shed at each slot, on the upper
/// or lower envelope.
fn shed_effects(lay: &UflsLayout, safr: &DiscreteSafr, envelopes: &[ShedEnvelope], upper: bool) -> Vec<[f64; 3]> {
    let n = safr.n_bus();
    lay.shed_buses
        .iter()
        .map(|&b| {
            let e = envelopes[b];
            let (p, q) = if upper { (e.p_plus, e.q_plus) } else { (e.p_minus, e.q_minus) };
            std::array::from_fn(|r| safr.b_d[(r, b)] * p + safr.b_d[(r, n + b)] * q)
        })
        .collect()
}

/// `x[k+1] = a_d·[δ, ω, P̃][k] + b_d·(Δu + shed(g[k−d]))` for both envelopes.
pub fn build_dynamics(
    m: &mut MilpModel,
    lay: &UflsLayout,
    safr: &DiscreteSafr,
    du: &DVector<f64>,
    envelopes: &[ShedEnvelope],
    cfg: &UflsOptConfig,
) {
    let base = &safr.b_d * du;
    for (tag, env) in lay.envelopes() {
        let effect = shed_effects(lay, safr, envelopes, tag == "p");
        let states = [&env.delta, &env.omega, &env.p_m];
        for k in 0..lay.k {
            let prev = [env.delta[k], env.omega[k], env.p_sat[k]];
            for (r, state) in states.iter().enumerate() {
                let mut row = vec![(state[k + 1], 1.0)];
                for (c, &col) in prev.iter().enumerate() {
                    row.push((col, -safr.a_d[(r, c)]));
                }
                if k >= cfg.delay_steps {
                    for st in &lay.stages {
                        for (slot, g) in st.g.iter().enumerate() {
                            row.push((g[k - cfg.delay_steps], -effect[slot][r]));
                        }
                    }
                }
                m.add_row(format!("dyn{r}_{tag}[{k}]"), &row, Sense::Eq, base[r]);
            }
        }
    }
}

/// Exact clamp of the governor state to `[dp_min, dp_max]`: a lower clamp
/// through `β, s` followed by an upper clamp through `γ, t`, each a product
/// of a binary and a bounded continuous variable linearized with big-M.
/// The clamped state also gets its range as bounds and the cut `P̃ ≤ Pl`,
/// both implied by the clamp.
pub fn build_governor_saturation(m: &mut MilpModel, lay: &UflsLayout, dp_min: f64, dp_max: f64, cfg: &UflsOptConfig) {
    let big = cfg.big_m;
    for (tag, env) in lay.envelopes() {
        for k in 0..lay.k {
            let (p, pl, pt) = (env.p_m[k], env.p_low[k], env.p_sat[k]);
            let (s, beta) = (env.s[k], env.beta[k]);
            let (t, gamma) = (env.t[k], env.gamma[k]);
            // β = 1 iff P ≥ min; Pl = β·P + (1 − β)·min.
            m.add_row(format!("lo1_{tag}[{k}]"), &[(beta, big), (p, -1.0)], Sense::Ge, -dp_min);
            m.add_row(format!("lo2_{tag}[{k}]"), &[(beta, big), (p, -1.0)], Sense::Le, big - dp_min);
            m.add_row(format!("lo3_{tag}[{k}]"), &[(pl, 1.0), (s, -1.0), (beta, dp_min)], Sense::Eq, dp_min);
            m.add_row(format!("lo4_{tag}[{k}]"), &[(s, 1.0), (beta, big)], Sense::Ge, 0.0);
            m.add_row(format!("lo5_{tag}[{k}]"), &[(s, 1.0), (beta, -big)], Sense::Le, 0.0);
            m.add_row(format!("lo6_{tag}[{k}]"), &[(s, 1.0), (p, -1.0), (beta, -big)], Sense::Ge, -big);
            m.add_row(format!("lo7_{tag}[{k}]"), &[(s, 1.0), (p, -1.0), (beta, big)], Sense::Le, big);
            // γ = 1 iff Pl ≤ max; P̃ = γ·Pl + (1 − γ)·max.
            m.add_row(format!("up1_{tag}[{k}]"), &[(gamma, big), (pl, 1.0)], Sense::Ge, dp_max);
            m.add_row(format!("up2_{tag}[{k}]"), &[(gamma, big), (pl, 1.0)], Sense::Le, big + dp_max);
            m.add_row(format!("up3_{tag}[{k}]"), &[(pt, 1.0), (t, -1.0), (gamma, dp_max)], Sense::Eq, dp_max);
            m.add_row(format!("up4_{tag}[{k}]"), &[(t, 1.0), (gamma, big)], Sense::Ge, 0.0);
            m.add_row(format!("up5_{tag}[{k}]"), &[(t, 1.0), (gamma, -big)], Sense::Le, 0.0);
            m.add_row(format!("up6_{tag}[{k}]"), &[(t, 1.0), (pl, -1.0), (gamma, -big)], Sense::Ge, -big);
            m.add_row(format!("up7_{tag}[{k}]"), &[(t, 1.0), (pl, -1.0), (gamma, big)], Sense::Le, big);
            m.add_row(format!("cap_{tag}[{k}]"), &[(pt, 1.0), (pl, -1.0)], Sense::Le, 0.0);
            m.variables[pl].lb = dp_min;
            m.variables[pt].lb = dp_min;
            m.variables[pt].ub = dp_max;
        }
    }
}

/// Trigger logic on the upper frequency envelope. A stage's binary must
/// switch on at the first step below its threshold, may stay on for at most
/// `K_db` steps in total, and a shed increment needs `K_db` consecutive
/// active steps. Shed fractions never decrease. A stage can only be active
/// once the stage above it has switched on, since its threshold is lower.
pub fn build_threshold_logic(m: &mut MilpModel, lay: &UflsLayout, cfg: &UflsOptConfig) {
    let kdb = cfg.deadband_steps;
    let w = &lay.upper.omega;
    for (i, st) in lay.stages.iter().enumerate() {
        for k in 0..lay.k {
            m.add_row(
                format!("arm_{i}[{k}]"),
                &[(st.alpha[k], 1.0), (st.threshold, -1.0), (w[k], 1.0)],
                Sense::Le,
                1.0,
            );
            let mut row = vec![(st.alpha[k], 1.0), (st.threshold, -1.0), (w[k], 1.0)];
            row.extend(st.alpha[..k].iter().map(|&a| (a, 1.0)));
            m.add_row(format!("force_{i}[{k}]"), &row, Sense::Ge, 0.0);
        }
        let all: Vec<_> = st.alpha.iter().map(|&a| (a, 1.0)).collect();
        m.add_row(format!("count_{i}"), &all, Sense::Le, kdb as f64);
        if i > 0 {
            let prev = &lay.stages[i - 1].alpha;
            for k in 0..lay.k {
                let mut row = vec![(st.alpha[k], 1.0)];
                row.extend(prev[..=k].iter().map(|&a| (a, -1.0)));
                m.add_row(format!("order_{i}[{k}]"), &row, Sense::Le, 0.0);
            }
        }
        for (slot, g) in st.g.iter().enumerate() {
            for k in 0..lay.k {
                for z in 0..kdb {
                    let mut row = vec![(g[k + 1], 1.0), (g[k], -1.0)];
                    if k >= z {
                        row.push((st.alpha[k - z], -1.0));
                    }
                    m.add_row(format!("inc_{i}_{slot}_{z}[{k}]"), &row, Sense::Le, 0.0);
                }
                m.add_row(format!("mono_{i}_{slot}[{k}]"), &[(g[k + 1], 1.0), (g[k], -1.0)], Sense::Ge, 0.0);
            }
        }
    }
}

/// Nadir bound at every step and settling band at the final step, both envelopes.
pub fn build_frequency_limits(m: &mut MilpModel, lay: &UflsLayout, cfg: &UflsOptConfig, nominal_hz: f64) {
    let pu = |hz: f64| hz / nominal_hz - 1.0;
    for (tag, env) in lay.envelopes() {
        for k in 0..=lay.k {
            m.add_row(format!("nadir_{tag}[{k}]"), &[(env.omega[k], 1.0)], Sense::Ge, pu(cfg.omega_min_hz));
        }
    }
    for (tag, env) in lay.envelopes() {
        let last = env.omega[lay.k];
        m.add_row(format!("ss_lo_{tag}"), &[(last, 1.0)], Sense::Ge, pu(cfg.omega_ss_min_hz));
        m.add_row(format!("ss_hi_{tag}"), &[(last, 1.0)], Sense::Le, pu(cfg.omega_ss_max_hz));
    }
}

/// Per-stage shed cap, per-bus total of at most one, and threshold separation.
pub fn build_overshed_and_separation(
    m: &mut MilpModel,
    lay: &UflsLayout,
    p_demand_0: &[f64],
    cfg: &UflsOptConfig,
    nominal_hz: f64,
) {
    let total: f64 = p_demand_0.iter().sum();
    for (i, st) in lay.stages.iter().enumerate() {
        let row: Vec<_> = st
            .g
            .iter()
            .zip(&lay.shed_buses)
            .map(|(g, &b)| (g[lay.k], p_demand_0[b]))
            .collect();
        m.add_row(format!("overshed_{i}"), &row, Sense::Le, cfg.g_bar * total);
    }
    for slot in 0..lay.shed_buses.len() {
        let row: Vec<_> = lay.stages.iter().map(|st| (st.g[slot][lay.k], 1.0)).collect();
        m.add_row(format!("busmax_{slot}"), &row, Sense::Le, 1.0);
    }
    let sep = cfg.omega_sep_hz / nominal_hz;
    for (i, pair) in lay.stages.windows(2).enumerate() {
        m.add_row(
            format!("sep_{i}"),
            &[(pair[1].threshold, 1.0), (pair[0].threshold, -1.0)],
            Sense::Le,
            -sep,
        );
    }
}

/// Reduced frequency with no shedding, `k = 0..=K`, governor state clamped.
pub fn no_shed_frequency(safr: &DiscreteSafr, du: &DVector<f64>, k: usize) -> Vec<f64> {
    let base = &safr.b_d * du;
    let mut x = [0.0f64; 3];
    let mut w = vec![0.0; k + 1];
    for wk in w.iter_mut().skip(1) {
        let mut sat = x;
        sat[2] = sat[2].clamp(safr.dp_min, safr.dp_max);
        x = std::array::from_fn(|r| base[r] + (0..3).map(|c| safr.a_d[(r, c)] * sat[c]).sum::<f64>());
        *wk = x[1];
    }
    w
}

/// Fixes to zero the trigger and shed columns that no feasible point can
/// raise. Until the first shed reaches the dynamics both envelopes follow
/// the no-shed trajectory `w0`, and a shed needs `K_db` armed steps plus
/// `d` steps of delay after the first crossing of the highest admissible
/// threshold. Within that window stage `i` can only arm where `w0` lies
/// below `ω_shed_max − i·ω_sep`.
pub fn fix_pre_shed_window(m: &mut MilpModel, lay: &UflsLayout, w0: &[f64], cfg: &UflsOptConfig, nominal_hz: f64) {
    const MARGIN: f64 = 1e-6;
    let top = cfg.omega_shed_max_hz / nominal_hz - 1.0;
    let sep = cfg.omega_sep_hz / nominal_hz;
    let window_end = w0[..lay.k]
        .iter()
        .position(|&w| w < top + MARGIN)
        .map_or(lay.k, |c| (c + cfg.deadband_steps + cfg.delay_steps).min(lay.k));
    for (i, st) in lay.stages.iter().enumerate() {
        let reach = top - i as f64 * sep + MARGIN;
        let mut first_free = None;
        for k in 0..lay.k {
            if k >= window_end || w0[k] <= reach {
                first_free = Some(k);
                break;
            }
            m.variables[st.alpha[k]].ub = 0.0;
        }
        let first_rise = first_free.map_or(lay.k + 1, |k| k + cfg.deadband_steps);
        for g in &st.g {
            for &col in &g[..first_rise.min(lay.k + 1)] {
                m.variables[col].ub = 0.0;
            }
        }
    }
}

/// Fixes to one the clamp binaries of steps where interval bounds show the
/// governor state cannot reach that limit. The bounds follow the dynamics
/// from `x[0] = 0` with `ω` in its box, `P̃` in its range and every slot's
/// shed anywhere between none and full.
pub fn fix_inactive_clamps(
    m: &mut MilpModel,
    lay: &UflsLayout,
    safr: &DiscreteSafr,
    du: &DVector<f64>,
    envelopes: &[ShedEnvelope],
    cfg: &UflsOptConfig,
    nominal_hz: f64,
) {
    const MARGIN: f64 = 1e-6;
    let base = &safr.b_d * du;
    let w_lo = (cfg.omega_min_hz / nominal_hz - 1.0).max(-OMEGA_BOX);
    for (tag, env) in lay.envelopes() {
        let effect = shed_effects(lay, safr, envelopes, tag == "p");
        // Per slot the stages together shed at most the whole load.
        let reach = if lay.stages.is_empty() { 0.0 } else { 1.0 };
        let mut lo = [0.0f64; 3];
        let mut hi = [0.0f64; 3];
        for k in 0..lay.k {
            if lo[2] >= safr.dp_min + MARGIN {
                m.variables[env.beta[k]].lb = 1.0;
            }
            if hi[2] <= safr.dp_max - MARGIN {
                m.variables[env.gamma[k]].lb = 1.0;
            }
            let box_lo = [lo[0], lo[1].max(w_lo), lo[2].clamp(safr.dp_min, safr.dp_max)];
            let box_hi = [hi[0], hi[1].min(OMEGA_BOX), hi[2].clamp(safr.dp_min, safr.dp_max)];
            for r in 0..3 {
                let (mut l, mut h) = (base[r], base[r]);
                for c in 0..3 {
                    let a = safr.a_d[(r, c)];
                    let (x, y) = (a * box_lo[c], a * box_hi[c]);
                    l += x.min(y);
                    h += x.max(y);
                }
                if k >= cfg.delay_steps {
                    for e in &effect {
                        l += e[r].min(0.0) * reach;
                        h += e[r].max(0.0) * reach;
                    }
                }
                lo[r] = l;
                hi[r] = h;
            }
        }
    }
}

/// The full shedding problem: minimize final shed demand subject to every
/// constraint family above.
pub fn assemble(inst: &UflsInstance, cfg: &UflsOptConfig) -> Result<UflsMilp, OptError> {
    cfg.validate()?;
    inst.check()?;
    let shed_buses = inst.shed_buses();
    let bus_ids = inst.model.bus_ids.clone();
    let mut m = MilpModel::new("UFLS");
    let lay = declare_variables(&mut m, cfg, &shed_buses, &bus_ids, inst.nominal_hz);
    let envelopes = build_shed_envelopes(&inst.zip, cfg);
    build_dynamics(&mut m, &lay, &inst.model, &inst.du, &envelopes, cfg);
    build_governor_saturation(&mut m, &lay, inst.model.dp_min, inst.model.dp_max, cfg);
    build_threshold_logic(&mut m, &lay, cfg);
    build_frequency_limits(&mut m, &lay, cfg, inst.nominal_hz);
    build_overshed_and_separation(&mut m, &lay, &inst.p_demand_0, cfg, inst.nominal_hz);
    let w0 = no_shed_frequency(&inst.model, &inst.du, lay.k);
    fix_pre_shed_window(&mut m, &lay, &w0, cfg, inst.nominal_hz);
    fix_inactive_clamps(&mut m, &lay, &inst.model, &inst.du, &envelopes, cfg, inst.nominal_hz);
    let objective: Vec<_> = lay
        .stages
        .iter()
        .flat_map(|st| st.g.iter().zip(&lay.shed_buses).map(|(g, &b)| (g[lay.k], inst.p_demand_0[b])))
        .collect();
    m.set_objective(&objective);
    Ok(UflsMilp {
        model: m,
        layout: lay,
        cfg: cfg.clone(),
        nominal_hz: inst.nominal_hz,
        bus_ids,
        p_demand_0: inst.p_demand_0.clone(),
        dp_min: inst.model.dp_min,
        dp_max: inst.model.dp_max,
    })
}
