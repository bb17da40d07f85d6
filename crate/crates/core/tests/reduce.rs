mod common;

use nalgebra::{DMatrix, DVector};
use ufls::dynsim::{DaeSystem, EventKind};
use ufls::harness::imbalance_scenario;
use ufls::reduce::*;

use common::{case, central_difference, full_linear_coi, nadir_and_settling, single, wscc9};

fn assert_close(name: &str, analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) {
    for ((i, j), a) in analytic.iter().enumerate().map(|(k, a)| ((k % analytic.nrows(), k / analytic.nrows()), a)) {
        let n = numeric[(i, j)];
        assert!(
            (a - n).abs() <= 1e-6 * a.abs().max(1.0),
            "{name}[{i},{j}]: analytic {a}, finite difference {n}"
        );
    }
}

#[test]
fn jacobians_match_central_differences_away_from_equilibrium() {
    let (net, sol) = wscc9();
    let (sys, mut x, mut y) = DaeSystem::at_equilibrium(&net, &sol).unwrap();
    for (k, v) in x.iter_mut().enumerate() {
        *v += 0.01 * ((k as f64) * 0.7).sin();
    }
    for (k, v) in y.iter_mut().enumerate() {
        *v += 0.02 * ((k as f64) * 1.3).cos();
    }
    let (fx, fy, gx, gy) = sys.jacobians(&x, &y);
    let h = 1e-6;
    assert_close("f_x", &fx, &central_difference(|x| sys.f(x, &y), &x, h));
    assert_close("f_y", &fy, &central_difference(|y| sys.f(&x, y), &y, h));
    assert_close("g_x", &gx, &central_difference(|x| sys.g(x, &y), &x, h));
    assert_close("g_y", &gy, &central_difference(|y| sys.g(&x, y), &y, h));
}

#[test]
fn safr_tracks_the_full_linear_model_better_than_sfr() {
    let (net, sol) = wscc9();
    let scen = imbalance_scenario(&net, &sol, 2, 10.0, 0.0).unwrap();
    let post = post_event_system(&net, &sol, &scen).unwrap();
    let dt = 0.01;
    // Long enough for the governors (T = 5 s) to finish acting.
    let horizon = 12.0 * net.generators[0].governor.t;
    let u = vec![post.du.clone(); (horizon / dt).round() as usize];
    let run = |m: &SafrModel| simulate_reduced(&discretize(m, dt).unwrap(), &u).unwrap();
    let f0 = net.nominal_hz;
    let full = nadir_and_settling(&full_linear_coi(&post, dt, horizon, 10), dt, f0);
    let safr = nadir_and_settling(&run(&build_safr(&post.net, &post.sol).unwrap()), dt, f0);
    let sfr = nadir_and_settling(&run(&build_sfr(&post.net).unwrap().as_reduced()), dt, f0);
    assert!((safr.0 - full.0).abs() <= 0.15, "nadir {safr:?} vs {full:?}");
    assert!((safr.1 - full.1).abs() <= 0.05, "settling {safr:?} vs {full:?}");
    assert!((sfr.1 - full.1).abs() > (safr.1 - full.1).abs(), "sfr {sfr:?} safr {safr:?} full {full:?}");
}

#[test]
fn one_machine_safr_is_the_eliminated_linear_model() {
    let (net, sol) = case("two_bus.json");
    let lin = linearize(&net, &sol).unwrap();
    let ky = lin.k_y.clone().lu();
    let a = &lin.a_x - &lin.a_y * ky.solve(&lin.k_x).unwrap();
    let b = &lin.a_y * ky.solve(&DMatrix::identity(4, 4)).unwrap();
    let safr = build_safr(&net, &sol).unwrap();
    assert!((&safr.a_r - &a).amax() <= 1e-10, "{} vs {a}", safr.a_r);
    assert!((&safr.b_r - &b).amax() <= 1e-10);
}

/// Exact response to a step input through the augmented matrix exponential.
fn exact_state(m: &SafrModel, du: &DVector<f64>, t: f64) -> DVector<f64> {
    let mut aug = DMatrix::zeros(4, 4);
    aug.view_mut((0, 0), (3, 3)).copy_from(&m.a_r);
    aug.view_mut((0, 3), (3, 1)).copy_from(&(&m.b_r * du));
    let e = (aug * t).exp();
    DVector::from_iterator(3, e.view((0, 3), (3, 1)).iter().copied())
}

#[test]
fn halving_the_step_quarters_the_discretization_error() {
    let (net, sol) = case("two_bus.json");
    let scen = single(0.0, EventKind::Inject { bus: 2, p: -0.02, q: 0.0 });
    let post = post_event_system(&net, &sol, &scen).unwrap();
    let model = build_safr(&post.net, &post.sol).unwrap();
    let horizon = 2.0;
    let error = |dt: f64| {
        let k = (horizon / dt).round() as usize;
        let w = simulate_reduced(&discretize(&model, dt).unwrap(), &vec![post.du.clone(); k]).unwrap();
        (1..=k)
            .map(|j| (w[j] - exact_state(&model, &post.du, j as f64 * dt)[1]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (error(0.02), error(0.01));
    assert!(e2 < e1 / 3.5, "errors {e1:e} and {e2:e}");
}

#[test]
fn scaled_load_and_equivalent_injection_agree() {
    let (net, sol) = wscc9();
    let bus = 5;
    let k = net.bus_index(bus).unwrap();
    let (p, q) = (net.buses[k].p_demand_0, net.buses[k].q_demand_0);
    let a = post_event_system(&net, &sol, &single(1.0, EventKind::ScaleLoad { bus, factor: 1.1 })).unwrap();
    let b = post_event_system(&net, &sol, &single(1.0, EventKind::Inject { bus, p: -0.1 * p, q: -0.1 * q })).unwrap();
    assert!((&a.du - &b.du).amax() <= 1e-15);
}
