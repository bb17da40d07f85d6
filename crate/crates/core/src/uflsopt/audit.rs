use super::formulation::{EnvelopeVars, UflsMilp};
use super::solve::MilpSolution;

const TOL: f64 = 1e-6;
/// A shed fraction counts as having moved when it changes by more than this.
const STEP_EPS: f64 = 1e-7;

/// Outcome of the post-solve checks on one solution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    /// Largest `|P̃ − clamp(P)|` over both envelopes and all steps.
    pub saturation_error: f64,
    /// Largest `ω⁻[k] − ω⁺[k]`, zero or negative when the envelopes are ordered.
    pub dominance_violation: f64,
    /// Largest distance between a governor state and either limit.
    pub big_m_usage: f64,
    pub issues: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

fn envelope_saturation(env: &EnvelopeVars, x: &[f64], lo: f64, hi: f64) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for k in 0..env.p_sat.len() {
        let err = (x[env.p_sat[k]] - x[env.p_m[k]].clamp(lo, hi)).abs();
        if err > worst.0 {
            worst = (err, k);
        }
    }
    worst
}

/// Every clamped governor state equals the clamp of its raw state.
pub fn audit_saturation(milp: &UflsMilp, sol: &MilpSolution) -> (f64, Option<String>) {
    let mut worst: (f64, Option<String>) = (0.0, None);
    for (tag, env) in milp.layout.envelopes() {
        let (err, k) = envelope_saturation(env, &sol.values, milp.dp_min, milp.dp_max);
        if err > worst.0 {
            worst.0 = err;
            if err > TOL {
                worst.1 = Some(format!("saturation off by {err:.3e} on envelope {tag} at step {k}"));
            }
        }
    }
    worst
}

/// Each stage's shed at each bus rises at most once and never falls.
pub fn audit_trigger_once(milp: &UflsMilp, sol: &MilpSolution) -> Option<String> {
    for (i, st) in milp.layout.stages.iter().enumerate() {
        for (slot, g) in st.g.iter().enumerate() {
            let mut rises = 0;
            for w in g.windows(2) {
                let step = sol.values[w[1]] - sol.values[w[0]];
                if step < -STEP_EPS {
                    return Some(format!("stage {i} slot {slot} shed decreases"));
                }
                if step > STEP_EPS {
                    rises += 1;
                }
            }
            if rises > 1 {
                return Some(format!("stage {i} slot {slot} sheds in {rises} separate steps"));
            }
        }
    }
    None
}

/// No shed starts before the upper envelope has sat at or below the stage
/// threshold for a full deadband.
pub fn audit_threshold_consistency(milp: &UflsMilp, sol: &MilpSolution) -> Option<String> {
    let x = &sol.values;
    let kdb = milp.cfg.deadband_steps;
    let w: Vec<f64> = milp.layout.upper.omega.iter().map(|&c| x[c]).collect();
    for (i, st) in milp.layout.stages.iter().enumerate() {
        let thr = x[st.threshold];
        let first = st
            .g
            .iter()
            .filter_map(|g| g.iter().position(|&c| x[c] > STEP_EPS))
            .min();
        let Some(first) = first else { continue };
        let armed = (kdb - 1..first).any(|j| w[j + 1 - kdb..=j].iter().all(|&v| v <= thr + TOL));
        if !armed {
            return Some(format!(
                "stage {i} sheds at step {first} without {kdb} steps below its threshold"
            ));
        }
    }
    None
}

/// Lower envelope never above the upper one.
pub fn audit_envelope_dominance(milp: &UflsMilp, sol: &MilpSolution) -> (f64, Option<String>) {
    let lay = &milp.layout;
    let mut worst = (f64::NEG_INFINITY, 0);
    for k in 0..=lay.k {
        let d = sol.values[lay.lower.omega[k]] - sol.values[lay.upper.omega[k]];
        if d > worst.0 {
            worst = (d, k);
        }
    }
    let issue = (worst.0 > TOL).then(|| format!("lower envelope above upper by {:.3e} at step {}", worst.0, worst.1));
    (worst.0, issue)
}

/// Governor states stay within `S` of both limits, so the big-M rows never cut.
pub fn audit_big_m(milp: &UflsMilp, sol: &MilpSolution) -> (f64, Option<String>) {
    let mut worst: f64 = 0.0;
    for (_, env) in milp.layout.envelopes() {
        for cols in [&env.p_m[..env.p_sat.len()], &env.p_low[..]] {
            for &c in cols {
                let p = sol.values[c];
                worst = worst.max((milp.dp_max - p).abs()).max((milp.dp_min - p).abs());
            }
        }
    }
    let issue = (worst > milp.cfg.big_m).then(|| format!("governor state {worst:.3} from a limit exceeds S = {}", milp.cfg.big_m));
    (worst, issue)
}

pub fn audit_solution(milp: &UflsMilp, sol: &MilpSolution) -> AuditReport {
    let mut report = AuditReport::default();
    if sol.values.len() != milp.model.variables.len() {
        report.issues.push("solution has no point to audit".into());
        return report;
    }
    let (sat, issue) = audit_saturation(milp, sol);
    report.saturation_error = sat;
    report.issues.extend(issue);
    report.issues.extend(audit_trigger_once(milp, sol));
    report.issues.extend(audit_threshold_consistency(milp, sol));
    let (dom, issue) = audit_envelope_dominance(milp, sol);
    report.dominance_violation = dom;
    report.issues.extend(issue);
    let (usage, issue) = audit_big_m(milp, sol);
    report.big_m_usage = usage;
    report.issues.extend(issue);
    report
}
