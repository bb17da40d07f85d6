mod common;

use std::sync::OnceLock;

use proptest::prelude::*;
use ufls::dynsim::EventKind;
use ufls::uflsopt::*;

use common::{case, single};

struct Solved {
    inst: UflsInstance,
    cfg: UflsOptConfig,
    out: Optimized,
}

fn tiny_cfg() -> UflsOptConfig {
    UflsOptConfig {
        n_stages: 2,
        horizon_s: 10.0,
        ..UflsOptConfig::with_dt(0.1)
    }
}

fn tiny_instance(cfg: &UflsOptConfig) -> UflsInstance {
    let (net, sol) = case("three_bus.json");
    let scen = single(0.0, EventKind::ScaleLoad { bus: 3, factor: 1.25 });
    UflsInstance::new(&net, &sol, &scen, cfg, ModelKind::Safr).unwrap()
}

fn solved() -> &'static Solved {
    static CELL: OnceLock<Solved> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = tiny_cfg();
        let inst = tiny_instance(&cfg);
        let out = optimize(&inst, &cfg, &HighsBackend::default()).unwrap();
        Solved { inst, cfg, out }
    })
}

#[test]
fn optimum_is_no_worse_than_the_enumerated_grid() {
    let s = solved();
    assert_eq!(s.out.solution.status, SolveStatus::Optimal);
    let oracle = brute_force_oracle(&s.inst, &s.cfg, &OracleGrid::default()).unwrap();
    assert!(s.out.solution.objective <= oracle.objective + 1e-9);
    let fixed = fix_plan(&s.out.milp, oracle.plan.as_ref().unwrap()).unwrap();
    let check = solve(&fixed, &HighsBackend::default(), &s.cfg.limits()).unwrap();
    assert_eq!(check.status, SolveStatus::Optimal);
    assert!((check.objective - oracle.objective).abs() <= 1e-6);
}

#[test]
fn optimal_solution_passes_every_audit() {
    let s = solved();
    let report = s.out.audit.as_ref().unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(audit_saturation(&s.out.milp, &s.out.solution).0 <= 1e-6);
    assert!(audit_trigger_once(&s.out.milp, &s.out.solution).is_none());
    assert!(audit_threshold_consistency(&s.out.milp, &s.out.solution).is_none());
}

#[test]
fn upper_envelope_matches_a_replay_of_the_extracted_plan() {
    let s = solved();
    let plan = s.out.plan.as_ref().unwrap();
    let point = PlanPoint::from_plan(plan, &s.inst);
    let replay = replay_plan(&s.inst, &s.cfg, &point.thresholds_pu, &point.fractions);
    let (w_plus, w_minus) = envelope_frequencies(&s.out.milp, &s.out.solution).unwrap();
    for k in 0..w_plus.len() {
        assert!((w_plus[k] - replay.w_plus[k]).abs() <= 1e-6, "step {k}");
        assert!((w_minus[k] - replay.w_minus[k]).abs() <= 1e-6, "step {k}");
    }
}

#[test]
fn repeated_solves_give_the_same_plan() {
    let s = solved();
    let again = optimize(&s.inst, &s.cfg, &HighsBackend::default()).unwrap();
    assert_eq!(again.plan, s.out.plan);
    assert_eq!(again.solution.objective, s.out.solution.objective);
}

#[test]
fn too_small_a_stage_cap_is_infeasible() {
    let cfg = UflsOptConfig { g_bar: 0.01, ..tiny_cfg() };
    let inst = tiny_instance(&cfg);
    let out = optimize(&inst, &cfg, &HighsBackend::default()).unwrap();
    assert_eq!(out.solution.status, SolveStatus::Infeasible);
    assert!(out.plan.is_none());
}

#[test]
fn model_counts_follow_the_counting_formula() {
    let s = solved();
    let lay = &s.out.milp.layout;
    let (cols, rows, bins) = expected_counts(s.cfg.n_stages, lay.shed_buses.len(), lay.k, s.cfg.deadband_steps);
    let m = &s.out.milp.model;
    assert_eq!((m.variables.len(), m.constraints.len(), m.n_binary()), (cols, rows, bins));
}

#[test]
fn exported_file_solves_to_the_same_objective() {
    let s = solved();
    let dir = tempfile::tempdir().unwrap();
    let (mps, sol) = (dir.path().join("m.mps"), dir.path().join("m.sol"));
    export_mps(&s.out.milp.model, &mps).unwrap();
    let status = solve_mps_file(&mps, &sol, &s.cfg.limits()).unwrap();
    assert_eq!(status, SolveStatus::Optimal);
    let read = read_solution_file(&std::fs::read_to_string(&sol).unwrap(), &s.out.milp.model).unwrap();
    assert!((read.objective - s.out.solution.objective).abs() <= 1e-6 * s.out.solution.objective.max(1.0));
    assert!(s.out.milp.model.max_violation(&read.values).0 <= 1e-6);
}

#[test]
fn command_backend_round_trips_through_the_cli() {
    let s = solved();
    let backend = SubprocessBackend::new(format!("{} solve-mps {{mps}} {{sol}}", env!("CARGO_BIN_EXE_ufls")));
    let out = solve(&s.out.milp.model, &backend, &s.cfg.limits()).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.objective - s.out.solution.objective).abs() <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn voltage_dependent_shed_stays_inside_the_envelopes(
        seed in proptest::collection::vec(0.0f64..1.0, 8),
    ) {
        let s = solved();
        let g = shed_schedule(&s.out.milp, &s.out.solution).unwrap();
        let (w_plus, w_minus) = envelope_frequencies(&s.out.milp, &s.out.solution).unwrap();
        let n = s.inst.model.n_bus();
        let k = s.cfg.k();
        let v: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                (0..n)
                    .map(|b| {
                        let r = seed[(j / 25 + b) % seed.len()];
                        s.cfg.v_min + r * (s.cfg.v_max - s.cfg.v_min)
                    })
                    .collect()
            })
            .collect();
        let w = replay_with_voltages(&s.inst, &s.cfg, &g, &v).unwrap();
        for j in 0..=k {
            prop_assert!(w[j] <= w_plus[j] + 1e-9 && w[j] >= w_minus[j] - 1e-9, "step {j}: {} not in [{}, {}]", w[j], w_minus[j], w_plus[j]);
        }
    }
}
