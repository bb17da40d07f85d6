use std::collections::BTreeMap;

use super::formulation::UflsMilp;
use super::model::MilpModel;
use super::plan::{PlanStage, UflsPlan};
use super::solve::{MilpSolution, SolveStatus};
use super::OptError;

/// Fractions below this are reported as no shedding.
pub const FRACTION_EPS: f64 = 1e-9;

fn require_point(sol: &MilpSolution) -> Result<(), OptError> {
    if sol.status == SolveStatus::Infeasible || sol.values.is_empty() {
        return Err(OptError::NoPoint(sol.status));
    }
    Ok(())
}

/// Thresholds in Hz and final-step shed fractions of every stage.
pub fn extract_plan(milp: &UflsMilp, sol: &MilpSolution) -> Result<UflsPlan, OptError> {
    require_point(sol)?;
    let lay = &milp.layout;
    let stages = lay
        .stages
        .iter()
        .map(|st| {
            let fractions: BTreeMap<u32, f64> = st
                .g
                .iter()
                .zip(&lay.shed_buses)
                .map(|(g, &b)| (milp.bus_ids[b], sol.values[g[lay.k]].clamp(0.0, 1.0)))
                .filter(|(_, f)| *f > FRACTION_EPS)
                .collect();
            PlanStage {
                threshold_hz: milp.pu_to_hz(sol.values[st.threshold]),
                fractions,
            }
        })
        .collect();
    Ok(UflsPlan { stages })
}

/// Upper and lower envelope frequency deviations, p.u., `k = 0..=K`.
pub fn envelope_frequencies(milp: &UflsMilp, sol: &MilpSolution) -> Result<(Vec<f64>, Vec<f64>), OptError> {
    require_point(sol)?;
    let pick = |cols: &[usize]| cols.iter().map(|&c| sol.values[c]).collect();
    Ok((pick(&milp.layout.upper.omega), pick(&milp.layout.lower.omega)))
}

/// Total shed fraction per bus over time, `[k][bus]`, all network buses.
pub fn shed_schedule(milp: &UflsMilp, sol: &MilpSolution) -> Result<Vec<Vec<f64>>, OptError> {
    require_point(sol)?;
    let lay = &milp.layout;
    let mut out = vec![vec![0.0; milp.bus_ids.len()]; lay.k + 1];
    for st in &lay.stages {
        for (g, &b) in st.g.iter().zip(&lay.shed_buses) {
            for (k, &col) in g.iter().enumerate() {
                out[k][b] += sol.values[col];
            }
        }
    }
    Ok(out)
}

/// Copy of the model with the plan's thresholds and final fractions fixed.
/// Stages and buses the plan leaves out are fixed to zero shed.
pub fn fix_plan(milp: &UflsMilp, plan: &UflsPlan) -> Result<MilpModel, OptError> {
    let lay = &milp.layout;
    if plan.stages.len() != lay.stages.len() {
        return Err(OptError::Dimension(format!(
            "plan has {} stages, model {}",
            plan.stages.len(),
            lay.stages.len()
        )));
    }
    let mut m = milp.model.clone();
    for (st, ps) in lay.stages.iter().zip(&plan.stages) {
        let thr = milp.hz_to_pu(ps.threshold_hz);
        m.variables[st.threshold].lb = thr;
        m.variables[st.threshold].ub = thr;
        for (g, &b) in st.g.iter().zip(&lay.shed_buses) {
            let f = ps.fractions.get(&milp.bus_ids[b]).copied().unwrap_or(0.0);
            m.variables[g[lay.k]].lb = f;
            m.variables[g[lay.k]].ub = f;
        }
    }
    Ok(m)
}
