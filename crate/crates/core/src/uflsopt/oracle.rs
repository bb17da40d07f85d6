use std::collections::BTreeMap;

use nalgebra::DVector;

use super::config::UflsOptConfig;
use super::formulation::{build_shed_envelopes, UflsInstance, OMEGA_BOX};
use super::plan::{PlanStage, UflsPlan};
use super::OptError;
use crate::netcore::ZipLoad;
use crate::reduce::simulate_reduced_states;

/// Both envelope trajectories of a fixed plan and when each stage fired.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReplay {
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
    /// Full `[δ, ω, P]` states of the upper then lower envelope.
    pub states: [Vec<[f64; 3]>; 2],
    /// First step at which the stage's shed is nonzero.
    pub shed_step: Vec<Option<usize>>,
}

impl EnvelopeReplay {
    /// Both envelopes respect the nadir bound and the frequency box at every
    /// step and end in the settling band.
    pub fn feasible(&self, cfg: &UflsOptConfig, nominal_hz: f64) -> bool {
        let pu = |hz: f64| hz / nominal_hz - 1.0;
        let (nadir, lo, hi) = (pu(cfg.omega_min_hz), pu(cfg.omega_ss_min_hz), pu(cfg.omega_ss_max_hz));
        [&self.w_plus, &self.w_minus].iter().all(|w| {
            let last = *w.last().expect("non-empty trajectory");
            w.iter().all(|&v| v >= nadir && v.abs() <= OMEGA_BOX) && (lo..=hi).contains(&last)
        })
    }
}

/// Reduced-model replay of both envelopes under the MILP's relay semantics:
/// a stage arms on its first excursion strictly below threshold on the upper
/// envelope, sheds `K_db` steps later if the excursion lasts that long, and
/// its shed reaches the dynamics `d` steps after that.
///
/// `fractions[i][slot]` follows `inst.shed_buses()`.
pub fn replay_plan(inst: &UflsInstance, cfg: &UflsOptConfig, thresholds_pu: &[f64], fractions: &[Vec<f64>]) -> EnvelopeReplay {
    let k_max = cfg.k();
    let n = inst.model.n_bus();
    let slots = inst.shed_buses();
    let env = build_shed_envelopes(&inst.zip, cfg);
    let a = &inst.model.a_d;
    let base = &inst.model.b_d * &inst.du;
    // Per stage, per envelope, the state effect of the stage shedding fully.
    let effect: Vec<[[f64; 3]; 2]> = fractions
        .iter()
        .map(|fr| {
            std::array::from_fn(|e| {
                std::array::from_fn(|r| {
                    slots
                        .iter()
                        .zip(fr)
                        .map(|(&b, f)| {
                            let (p, q) = if e == 0 {
                                (env[b].p_plus, env[b].q_plus)
                            } else {
                                (env[b].p_minus, env[b].q_minus)
                            };
                            f * (inst.model.b_d[(r, b)] * p + inst.model.b_d[(r, n + b)] * q)
                        })
                        .sum()
                })
            })
        })
        .collect();
    let ns = thresholds_pu.len();
    let mut x = [[0.0f64; 3]; 2];
    let mut states = [vec![[0.0; 3]; k_max + 1], vec![[0.0; 3]; k_max + 1]];
    let mut shed_step: Vec<Option<usize>> = vec![None; ns];
    let mut run = vec![0usize; ns];
    let mut disarmed = vec![false; ns];
    for k in 0..k_max {
        for i in 0..ns {
            if shed_step[i].is_some() || disarmed[i] {
                continue;
            }
            if x[0][1] < thresholds_pu[i] {
                run[i] += 1;
                if run[i] == cfg.deadband_steps {
                    shed_step[i] = Some(k + 1);
                }
            } else if run[i] > 0 {
                disarmed[i] = true;
            }
        }
        for e in 0..2 {
            let mut sat = x[e];
            sat[2] = sat[2].clamp(inst.model.dp_min, inst.model.dp_max);
            let mut next = [0.0; 3];
            for (r, nr) in next.iter_mut().enumerate() {
                *nr = base[r] + (0..3).map(|c| a[(r, c)] * sat[c]).sum::<f64>();
                for i in 0..ns {
                    if matches!(shed_step[i], Some(s) if k >= s + cfg.delay_steps) {
                        *nr += effect[i][e][r];
                    }
                }
            }
            x[e] = next;
            states[e][k + 1] = next;
        }
    }
    let omega = |e: usize| states[e].iter().map(|x| x[1]).collect();
    EnvelopeReplay {
        w_plus: omega(0),
        w_minus: omega(1),
        states,
        shed_step,
    }
}

/// Reduced-model frequency when the shed schedule `g[k][bus]` disconnects
/// the power the loads actually draw at voltages `v[k][bus]`.
pub fn replay_with_voltages(
    inst: &UflsInstance,
    cfg: &UflsOptConfig,
    g: &[Vec<f64>],
    v: &[Vec<f64>],
) -> Result<Vec<f64>, OptError> {
    let n = inst.model.n_bus();
    let k_max = cfg.k();
    if g.len() != k_max + 1 || v.len() < k_max {
        return Err(OptError::Dimension(format!(
            "need {} shed rows and {k_max} voltage rows, got {} and {}",
            k_max + 1,
            g.len(),
            v.len()
        )));
    }
    let u: Vec<DVector<f64>> = (0..k_max)
        .map(|k| {
            let mut uk = inst.du.clone();
            if k >= cfg.delay_steps {
                let gk = &g[k - cfg.delay_steps];
                for b in 0..n {
                    let z: &ZipLoad = &inst.zip[b];
                    uk[b] += gk[b] * z.p_at(v[k][b]);
                    uk[n + b] += gk[b] * z.q_at(v[k][b]);
                }
            }
            uk
        })
        .collect();
    Ok(simulate_reduced_states(&inst.model, &u)?.iter().map(|x| x[1]).collect())
}

/// Enumeration grid for [`brute_force_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    pub fraction_step: f64,
    pub threshold_step_hz: f64,
    /// Refuse to start when more plans than this would be evaluated.
    pub max_evaluations: u64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            fraction_step: 0.01,
            threshold_step_hz: 0.1,
            max_evaluations: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Cheapest feasible plan, with untriggered stages zeroed; `None` if the grid has none.
    pub plan: Option<UflsPlan>,
    pub objective: f64,
    pub evaluations: u64,
}

fn fraction_vectors(slots: usize, levels: usize, step: f64, demand: &[f64], cap: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; slots];
    loop {
        let f: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        let shed: f64 = f.iter().zip(demand).map(|(a, b)| a * b).sum();
        if shed <= cap + 1e-12 {
            out.push(f);
        }
        let mut j = 0;
        loop {
            if j == slots {
                return out;
            }
            idx[j] += 1;
            if idx[j] < levels {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Exhaustive search over a threshold grid and a shed-fraction grid, using
/// [`replay_plan`] as the model. Candidates are visited in order of
/// increasing designed shed, so the first feasible one is optimal on the grid.
pub fn brute_force_oracle(inst: &UflsInstance, cfg: &UflsOptConfig, grid: &OracleGrid) -> Result<OracleResult, OptError> {
    cfg.validate()?;
    let slots = inst.shed_buses();
    let demand: Vec<f64> = slots.iter().map(|&b| inst.p_demand_0[b]).collect();
    let total = inst.total_demand();
    let levels = (1.0 / grid.fraction_step).round() as usize + 1;
    let per_stage = fraction_vectors(slots.len(), levels, grid.fraction_step, &demand, cfg.g_bar * total);

    let n_thr = ((cfg.omega_shed_max_hz - cfg.omega_shed_min_hz) / grid.threshold_step_hz + 1e-9).floor() as usize + 1;
    let thr_hz: Vec<f64> = (0..n_thr)
        .map(|i| cfg.omega_shed_max_hz - i as f64 * grid.threshold_step_hz)
        .collect();
    let mut thr_combos: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..cfg.n_stages {
        let mut next = Vec::new();
        for c in &thr_combos {
            for &t in &thr_hz {
                if c.last().is_none_or(|&prev: &f64| t <= prev - cfg.omega_sep_hz + 1e-9) {
                    let mut c2 = c.clone();
                    c2.push(t);
                    next.push(c2);
                }
            }
        }
        thr_combos = next;
    }

    let mut plans: Vec<(f64, Vec<Vec<f64>>)> = vec![(0.0, vec![])];
    for _ in 0..cfg.n_stages {
        let mut next = Vec::new();
        for (_, p) in &plans {
            for f in &per_stage {
                let mut p2 = p.clone();
                p2.push(f.clone());
                let bus_ok = (0..slots.len()).all(|s| p2.iter().map(|st| st[s]).sum::<f64>() <= 1.0 + 1e-12);
                if bus_ok {
                    let shed = p2.iter().flat_map(|st| st.iter().zip(&demand).map(|(a, b)| a * b)).sum();
                    next.push((shed, p2));
                }
            }
        }
        plans = next;
    }
    let budget = plans.len() as u64 * thr_combos.len() as u64;
    if budget > grid.max_evaluations {
        return Err(OptError::OracleBudget(budget));
    }
    plans.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut evaluations = 0u64;
    let mut best: Option<(f64, UflsPlan)> = None;
    for (_, fractions) in &plans {
        if best.as_ref().is_some_and(|(obj, _)| fractions_shed(fractions, &demand) > *obj + 1e-12) {
            break;
        }
        for thr in &thr_combos {
            evaluations += 1;
            let thr_pu: Vec<f64> = thr.iter().map(|h| h / inst.nominal_hz - 1.0).collect();
            let run = replay_plan(inst, cfg, &thr_pu, fractions);
            if !run.feasible(cfg, inst.nominal_hz) {
                continue;
            }
            let fired: Vec<Vec<f64>> = fractions
                .iter()
                .zip(&run.shed_step)
                .map(|(f, s)| if s.is_some() { f.clone() } else { vec![0.0; f.len()] })
                .collect();
            let obj = fractions_shed(&fired, &demand);
            if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-12) {
                let stages = thr
                    .iter()
                    .zip(&fired)
                    .map(|(&threshold_hz, f)| PlanStage {
                        threshold_hz,
                        fractions: slots
                            .iter()
                            .zip(f)
                            .filter(|(_, &x)| x > 0.0)
                            .map(|(&b, &x)| (inst.model.bus_ids[b], x))
                            .collect::<BTreeMap<_, _>>(),
                    })
                    .collect();
                best = Some((obj, UflsPlan { stages }));
            }
        }
    }
    Ok(match best {
        Some((objective, plan)) => OracleResult {
            plan: Some(plan),
            objective,
            evaluations,
        },
        None => OracleResult {
            plan: None,
            objective: f64::INFINITY,
            evaluations,
        },
    })
}

fn fractions_shed(fractions: &[Vec<f64>], demand: &[f64]) -> f64 {
    fractions
        .iter()
        .flat_map(|st| st.iter().zip(demand).map(|(a, b)| a * b))
        .sum()
}
