mod common;

use proptest::prelude::*;
use ufls::netcore::*;

use common::residual;

#[test]
fn bundled_cases_converge_and_satisfy_power_balance() {
    for name in ["two_bus.json", "three_bus.json", "wscc9.json"] {
        let (net, sol) = common::case(name);
        assert!(sol.iterations <= 10, "{name}: {} iterations", sol.iterations);
        assert!(sol.mismatch <= 1e-8, "{name}: mismatch {}", sol.mismatch);
        let r = residual(&net, &sol);
        assert!(r <= 1e-8, "{name}: independent residual {r:e}");
    }
}

#[test]
fn internal_emf_reproduces_dispatch() {
    for name in ["two_bus.json", "three_bus.json", "wscc9.json"] {
        let (net, sol) = common::case(name);
        let init = compute_internal_emf(&net, &sol).unwrap();
        for (k, (g, m)) in net.generators.iter().zip(&init).enumerate() {
            let i = net.bus_index(g.bus).unwrap();
            let (p, q) = machine_injection(m.e_internal, m.delta_0, sol.v[i], sol.theta[i], g.x_d_prime);
            assert!((p - sol.gen_p[k]).abs() < 1e-10, "{name} gen {k}: p {p} vs {}", sol.gen_p[k]);
            assert!((q - sol.gen_q[k]).abs() < 1e-10, "{name} gen {k}: q {q} vs {}", sol.gen_q[k]);
        }
    }
}

#[test]
fn zip_loads_reproduce_demand_at_solved_voltage() {
    let (net, sol) = common::wscc9();
    let zip = derive_zip_params(&net, &sol).unwrap();
    for (i, bus) in net.buses.iter().enumerate() {
        assert!((zip[i].p_at(sol.v[i]) - bus.p_demand_0).abs() < 1e-12);
        assert!((zip[i].q_at(sol.v[i]) - bus.q_demand_0).abs() < 1e-12);
    }
}

#[test]
fn network_file_round_trips() {
    let (net, _) = common::wscc9();
    let back = network_from_json(&network_to_json(&net)).unwrap();
    assert_eq!(back, net);
}

fn ring(params: &[(f64, f64, f64)]) -> Network {
    let n = params.len();
    let buses: Vec<String> = (1..=n)
        .map(|id| {
            let kind = if id == 1 { "slack" } else { "pq" };
            let load = if id == 1 { 0.0 } else { 0.1 };
            format!(r#"{{"id": {id}, "kind": "{kind}", "p_load": {load}, "q_load": 0.02, "zip_a": 0.0, "zip_b": 0.0}}"#)
        })
        .collect();
    let branches: Vec<String> = params
        .iter()
        .enumerate()
        .map(|(k, (r, x, b))| format!(r#"{{"from": {}, "to": {}, "r": {r}, "x": {x}, "b_shunt": {b}}}"#, k + 1, (k + 1) % n + 1))
        .collect();
    let gen = r#"{"bus": 1, "m": 10.0, "d": 1.0, "xdp": 0.2, "p_dispatch": 0.5, "q_dispatch": 0.0,
                 "governor": {"r": 0.05, "t": 0.1, "pmin": 0.0, "pmax": 2.0}}"#;
    let doc = format!(
        r#"{{"base_mva": 100.0, "nominal_hz": 60.0, "buses": [{}], "branches": [{}], "generators": [{gen}]}}"#,
        buses.join(","),
        branches.join(",")
    );
    network_from_json(&doc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn admittance_matrix_is_symmetric(params in prop::collection::vec((0.0..0.05f64, 0.05..0.5f64, 0.0..0.3f64), 3..8)) {
        let net = ring(&params);
        let y = build_admittance(&net);
        for i in 0..y.dim() {
            for j in 0..y.dim() {
                prop_assert_eq!(y.get(i, j), y.get(j, i));
            }
        }
    }

    #[test]
    fn scaled_loads_still_balance(scale in 0.7..1.1f64) {
        let (mut net, _) = common::wscc9();
        for b in &mut net.buses {
            b.p_demand_0 *= scale;
            b.q_demand_0 *= scale;
        }
        let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(sol.iterations <= 10);
        prop_assert!(residual(&net, &sol) <= 1e-8);
    }
}
