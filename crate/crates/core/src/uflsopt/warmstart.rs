use super::config::UflsOptConfig;
use super::formulation::{UflsInstance, UflsMilp};
use super::model::MilpModel;
use super::oracle::replay_plan;
use super::plan::UflsPlan;
use super::solve::{SolveLimits, SolveStatus, SolverBackend};
use super::OptError;

/// Thresholds (p.u. deviation) and per-slot fractions of a plan, in the
/// slot order of `inst.shed_buses()`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanPoint {
    pub thresholds_pu: Vec<f64>,
    pub fractions: Vec<Vec<f64>>,
}

impl PlanPoint {
    pub fn from_plan(plan: &UflsPlan, inst: &UflsInstance) -> Self {
        let slots = inst.shed_buses();
        PlanPoint {
            thresholds_pu: plan.stages.iter().map(|s| s.threshold_hz / inst.nominal_hz - 1.0).collect(),
            fractions: plan
                .stages
                .iter()
                .map(|s| {
                    slots
                        .iter()
                        .map(|&b| s.fractions.get(&inst.model.bus_ids[b]).copied().unwrap_or(0.0))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Cheap search for a feasible plan. Every stage sheds the same fraction at
/// all load buses; stage fractions come from a coarse grid, the first
/// threshold from a 0.1 Hz grid and the gaps from small multiples of the
/// minimum separation. Returns the least-shed feasible candidate, with
/// stages that never fire zeroed.
pub fn heuristic_plan(inst: &UflsInstance, cfg: &UflsOptConfig) -> Option<PlanPoint> {
    const LEVELS: usize = 6;
    let slots = inst.shed_buses();
    let slot_demand: f64 = slots.iter().map(|&b| inst.p_demand_0[b]).sum();
    if slot_demand <= 0.0 {
        return None;
    }
    let ns = cfg.n_stages;
    let f_max = (cfg.g_bar * inst.total_demand() / slot_demand).min(1.0 / ns as f64);
    let f0 = inst.nominal_hz;
    let thr_min = cfg.omega_shed_min_hz / f0 - 1.0;

    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..ns {
        combos = combos
            .iter()
            .flat_map(|c| {
                (0..=LEVELS).map(move |l| {
                    let mut c = c.clone();
                    c.push(l);
                    c
                })
            })
            .collect();
    }
    combos.sort_by_key(|c| (c.iter().sum::<usize>(), c.clone()));
    let mut gaps: Vec<Vec<f64>> = vec![vec![]];
    for _ in 1..ns {
        gaps = gaps
            .iter()
            .flat_map(|g| {
                [1.0, 1.5, 2.0].map(|m| {
                    let mut g = g.clone();
                    g.push(cfg.omega_sep_hz * m);
                    g
                })
            })
            .collect();
    }

    let mut best: Option<(f64, PlanPoint)> = None;
    for top in 0..8 {
        let first = cfg.omega_shed_max_hz - 0.1 * top as f64;
        for gap in &gaps {
            let mut hz = vec![first];
            for g in gap {
                hz.push(hz.last().unwrap() - g);
            }
            let thresholds_pu: Vec<f64> = hz.iter().map(|h| h / f0 - 1.0).collect();
            if thresholds_pu.iter().any(|&t| t < thr_min) {
                continue;
            }
            for c in &combos {
                let designed = c.iter().sum::<usize>() as f64 * f_max / LEVELS as f64 * slot_demand;
                if best.as_ref().is_some_and(|(b, _)| designed >= *b - 1e-12) {
                    break;
                }
                let fractions: Vec<Vec<f64>> = c
                    .iter()
                    .map(|&l| vec![f_max * l as f64 / LEVELS as f64; slots.len()])
                    .collect();
                let run = replay_plan(inst, cfg, &thresholds_pu, &fractions);
                if !run.feasible(cfg, f0) {
                    continue;
                }
                let fractions: Vec<Vec<f64>> = fractions
                    .iter()
                    .zip(&run.shed_step)
                    .map(|(fr, s)| if s.is_some() { fr.clone() } else { vec![0.0; fr.len()] })
                    .collect();
                let shed = fractions.iter().map(|f| f[0]).sum::<f64>() * slot_demand;
                best = Some((shed, PlanPoint { thresholds_pu: thresholds_pu.clone(), fractions }));
                break;
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Complete column assignment of the MILP that realizes a fixed plan, built
/// by replaying the reduced model. Stages that never fire get zero shed.
pub fn assignment_from_plan(milp: &UflsMilp, inst: &UflsInstance, point: &PlanPoint) -> Result<Vec<f64>, OptError> {
    let lay = &milp.layout;
    let cfg = &milp.cfg;
    if point.thresholds_pu.len() != lay.stages.len() || point.fractions.iter().any(|f| f.len() != lay.shed_buses.len()) {
        return Err(OptError::Dimension("plan does not match the model's stages and buses".into()));
    }
    let run = replay_plan(inst, cfg, &point.thresholds_pu, &point.fractions);
    let mut x = vec![0.0; milp.model.variables.len()];
    for (e, (_, env)) in lay.envelopes().iter().enumerate() {
        let states = &run.states[e];
        for k in 0..=lay.k {
            x[env.delta[k]] = states[k][0];
            x[env.omega[k]] = states[k][1];
            x[env.p_m[k]] = states[k][2];
        }
        for k in 0..lay.k {
            let p = states[k][2];
            let beta = if p >= milp.dp_min { 1.0 } else { 0.0 };
            let pl = p.max(milp.dp_min);
            let gamma = if pl <= milp.dp_max { 1.0 } else { 0.0 };
            x[env.beta[k]] = beta;
            x[env.s[k]] = beta * p;
            x[env.p_low[k]] = pl;
            x[env.gamma[k]] = gamma;
            x[env.t[k]] = gamma * pl;
            x[env.p_sat[k]] = pl.min(milp.dp_max);
        }
    }
    let w = &run.w_plus;
    for (i, st) in lay.stages.iter().enumerate() {
        let thr = point.thresholds_pu[i];
        x[st.threshold] = thr;
        if let Some(k0) = (0..lay.k).find(|&k| w[k] < thr) {
            x[st.alpha[k0]] = 1.0;
            if let Some(s) = run.shed_step[i] {
                for k in k0..s {
                    x[st.alpha[k]] = 1.0;
                }
            }
        }
        if let Some(s) = run.shed_step[i] {
            for (slot, g) in st.g.iter().enumerate() {
                for &col in &g[s..] {
                    x[col] = point.fractions[i][slot];
                }
            }
        }
    }
    Ok(x)
}

/// Re-optimizes the continuous columns of `x` with its binaries held fixed.
/// Returns the improved point when the LP solves and the result satisfies
/// the full model.
pub fn polish(model: &MilpModel, x: &[f64], backend: &dyn SolverBackend, limits: &SolveLimits) -> Option<Vec<f64>> {
    let lp = model.with_binaries_fixed(x);
    let sol = backend.solve_raw(&lp, limits, None).ok()?;
    (sol.status == SolveStatus::Optimal && sol.values.len() == x.len() && model.max_violation(&sol.values).0 <= 1e-7)
        .then_some(sol.values)
}

/// Hill climb over stage thresholds from `start`. A candidate's replay fixes
/// the binaries and [`polish`] sets the continuous columns; the best
/// polished point wins each round. Stages that never fire are retried with
/// a small shed at every admissible threshold on a 0.1 Hz grid. Stops when a
/// round brings no improvement or after `budget_s` seconds.
pub fn improve_start(
    milp: &UflsMilp,
    inst: &UflsInstance,
    backend: &dyn SolverBackend,
    limits: &SolveLimits,
    start: &PlanPoint,
    budget_s: f64,
) -> Option<Vec<f64>> {
    let clock = std::time::Instant::now();
    let cfg = &milp.cfg;
    let lay = &milp.layout;
    let pu = |hz: f64| hz / inst.nominal_hz - 1.0;
    let (thr_lo, thr_hi, sep) = (pu(cfg.omega_shed_min_hz), pu(cfg.omega_shed_max_hz), cfg.omega_sep_hz / inst.nominal_hz);
    let slot_demand: f64 = lay.shed_buses.iter().map(|&b| inst.p_demand_0[b]).sum();
    let seed_fraction = (cfg.g_bar * inst.total_demand() / slot_demand).min(1.0 / lay.stages.len() as f64) / 6.0;

    let evaluate = |point: &PlanPoint| -> Option<(f64, Vec<f64>, PlanPoint)> {
        let x = assignment_from_plan(milp, inst, point).ok()?;
        let x = polish(&milp.model, &x, backend, limits)?;
        let fractions = lay
            .stages
            .iter()
            .map(|st| st.g.iter().map(|g| x[g[lay.k]].max(0.0)).collect())
            .collect();
        let next = PlanPoint {
            thresholds_pu: point.thresholds_pu.clone(),
            fractions,
        };
        Some((milp.model.objective_value(&x), x, next))
    };
    let admissible = |t: &[f64]| {
        t.iter().all(|&v| (thr_lo - 1e-12..=thr_hi + 1e-12).contains(&v)) && t.windows(2).all(|w| w[1] <= w[0] - sep + 1e-12)
    };

    let (mut best_obj, mut best_x, mut best) = evaluate(start)?;
    let steps_hz = [-0.2, -0.1, -0.05, -0.02, 0.02, 0.05, 0.1, 0.2];
    loop {
        let mut candidates = Vec::new();
        for i in 0..best.thresholds_pu.len() {
            let fired = best.fractions[i].iter().any(|&f| f > 1e-9);
            if fired {
                for d in steps_hz {
                    let mut c = best.clone();
                    c.thresholds_pu[i] += d / inst.nominal_hz;
                    candidates.push(c);
                }
            } else {
                let mut hz = cfg.omega_shed_max_hz;
                while hz >= cfg.omega_shed_min_hz - 1e-9 {
                    let mut c = best.clone();
                    c.thresholds_pu[i] = pu(hz);
                    c.fractions[i] = vec![seed_fraction; c.fractions[i].len()];
                    candidates.push(c);
                    hz -= 0.1;
                }
            }
        }
        let mut improved = false;
        for c in candidates.iter().filter(|c| admissible(&c.thresholds_pu)) {
            if clock.elapsed().as_secs_f64() > budget_s {
                return Some(best_x);
            }
            if let Some((obj, x, next)) = evaluate(c) {
                if obj < best_obj - 1e-9 {
                    (best_obj, best_x, best) = (obj, x, next);
                    improved = true;
                }
            }
        }
        if !improved {
            return Some(best_x);
        }
    }
}
