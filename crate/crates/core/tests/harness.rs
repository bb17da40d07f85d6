mod common;

use std::path::{Path, PathBuf};

use ufls::dynsim::{make_static_plan, EventKind};
use ufls::harness::*;
use ufls::netcore::{load_network, save_network};
use ufls::uflsopt::{HighsBackend, UflsOptConfig};

use common::{data, g3_trip, single, wscc9};

fn tiny_optimizer() -> UflsOptConfig {
    UflsOptConfig {
        n_stages: 2,
        horizon_s: 10.0,
        ..UflsOptConfig::with_dt(0.1)
    }
}

fn write_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("load_step.json");
    std::fs::write(
        &path,
        r#"{"dt": 0.01, "horizon_s": 15.0, "events": [{"t": 0.5, "kind": "scale_load", "bus": 3, "factor": 1.25}]}"#,
    )
    .unwrap();
    path
}

fn run_pipeline(out: &Path, scenario: &Path) -> ComparisonReport {
    let mut cfg = RunConfig::new(data("three_bus.json"), vec![scenario.to_path_buf()], out);
    cfg.optimizer = tiny_optimizer();
    cmd_pipeline(&cfg, &HighsBackend::default()).unwrap()
}

fn without_times(mut r: ComparisonReport) -> ComparisonReport {
    r.rows.iter_mut().for_each(|row| row.solver_time_s = None);
    r
}

#[test]
fn pipeline_writes_every_artifact_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run_pipeline(&a, &scenario);
    assert_eq!(first.rows.len(), 3);
    for scheme in Scheme::ALL {
        let row = first.row("load_step", scheme).unwrap();
        assert_eq!(row.solver_time_s.is_some(), scheme != Scheme::Conventional);
        let sub = a.join("load_step").join(scheme.as_str());
        assert!(sub.join("plan.json").is_file());
        assert!(sub.join("trajectory.csv").is_file());
        assert_eq!(sub.join("model.mps").is_file(), scheme != Scheme::Conventional);
    }
    assert!(a.join("summary.md").is_file() && a.join("summary.csv").is_file());

    let second = run_pipeline(&b, &scenario);
    assert_eq!(without_times(first.clone()), without_times(second));
    for scheme in Scheme::ALL {
        let plan = |root: &Path| std::fs::read(root.join("load_step").join(scheme.as_str()).join("plan.json")).unwrap();
        assert_eq!(plan(&a), plan(&b), "{scheme}");
    }

    let reread = cmd_report(&a).unwrap();
    assert_eq!(reread, first);
}

#[test]
fn report_of_an_empty_tree_is_empty_and_a_missing_tree_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_report(dir.path()).unwrap().rows.is_empty());
    assert!(cmd_report(&dir.path().join("nope")).is_err());
}

#[test]
fn sweep_bounds_behave() {
    let (net, sol) = wscc9();
    let base = g3_trip();
    let plan = make_static_plan(&net, 4).unwrap();
    let rows = cmd_sweep(&net, &sol, &plan, &base, &[0.0, 25.0]).unwrap();
    assert_eq!(rows[0].shed_pct, 0.0);
    assert!(rows[0].criteria_met);
    let direct = validate_plan(&net, &sol, &base, &plan).unwrap();
    assert!((rows[1].nadir_hz - direct.metrics.nadir_hz).abs() <= 1e-9);
    assert!((rows[1].shed_pct - direct.metrics.total_shed_pct).abs() <= 1e-9);
}

#[test]
fn sampled_imbalances_are_seeded_sorted_and_in_range() {
    let a = sample_imbalances(20, 5.0, 25.0, 0);
    assert_eq!(a, sample_imbalances(20, 5.0, 25.0, 0));
    assert_ne!(a, sample_imbalances(20, 5.0, 25.0, 1));
    assert!(a.windows(2).all(|w| w[0] <= w[1]));
    assert!(a.iter().all(|x| (5.0..=25.0).contains(x)));
}

#[test]
fn imbalance_beyond_the_machine_output_is_rejected() {
    let (net, sol) = wscc9();
    assert!(imbalance_scenario(&net, &sol, 2, 30.0, 1.0).is_err());
    assert!(imbalance_scenario(&net, &sol, 7, 10.0, 1.0).is_err());
}

#[test]
fn identical_snapshots_reuse_the_previous_plan() {
    let dir = tempfile::tempdir().unwrap();
    let net = load_network(data("three_bus.json")).unwrap();
    let mut heavier = net.clone();
    let k = heavier.bus_index(3).unwrap();
    heavier.buses[k].p_demand_0 *= 1.05;
    heavier.buses[k].q_demand_0 *= 1.05;
    let paths: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("s{i}.json"))).collect();
    save_network(&net, &paths[0]).unwrap();
    save_network(&net, &paths[1]).unwrap();
    save_network(&heavier, &paths[2]).unwrap();
    let scen = single(0.0, EventKind::ScaleLoad { bus: 3, factor: 1.25 });
    let out = run_periods(&paths, &scen, &tiny_optimizer(), 0.5, &HighsBackend::default()).unwrap();
    assert_eq!(out.iter().map(|p| p.reoptimized).collect::<Vec<_>>(), [true, false, true]);
    assert_eq!(out[1].plan, out[0].plan);
    assert!(out[1].solver_time_s.is_none());
    assert_eq!(out[2].start_h, 1.0);
    assert!(out.iter().all(|p| p.plan.is_some()));
}

#[test]
fn variants_are_written_next_to_a_copy_of_the_base() {
    let dir = tempfile::tempdir().unwrap();
    let [base, half, der] = cmd_scenario_variants(&data("wscc9.json"), dir.path()).unwrap();
    for name in ["base.json", "half_inertia.json", "der.json"] {
        assert!(dir.path().join(name).is_file());
    }
    assert_eq!(load_network(dir.path().join("half_inertia.json")).unwrap(), half);
    assert!((der.total_demand() - (1.0 - DER_SHARE) * base.total_demand()).abs() <= 1e-12);
}
