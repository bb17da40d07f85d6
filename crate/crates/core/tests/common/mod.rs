#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ufls::dynsim::{DisturbanceScenario, Event, EventKind, ScenarioFile};
use ufls::netcore::{load_network, solve_power_flow, BusKind, Network, PowerFlowSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ufls::reduce::{linearize, ReducedScenario};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn case(name: &str) -> (Network, PowerFlowSolution) {
    let net = load_network(data(name)).unwrap();
    let sol = solve_power_flow(&net, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    (net, sol)
}

pub fn wscc9() -> (Network, PowerFlowSolution) {
    case("wscc9.json")
}

/// The bundled 25% generation-loss scenario on the 9-bus case.
pub fn g3_trip() -> ScenarioFile {
    ScenarioFile::load(data("scenarios/wscc9_g3_trip.json")).unwrap()
}

pub fn single(t: f64, kind: EventKind) -> DisturbanceScenario {
    DisturbanceScenario::new(vec![Event { t, kind }]).unwrap()
}

/// Centre-of-inertia frequency deviation (p.u.) of the unreduced linearized
/// post-event system, integrated with trapezoidal substeps and every
/// governor clamped to its own limits.
pub fn full_linear_coi(post: &ReducedScenario, dt: f64, horizon: f64, substeps: usize) -> Vec<f64> {
    let lin = linearize(&post.net, &post.sol).unwrap();
    let ng = lin.n_gen();
    let ky = lin.k_y.clone().lu();
    let a = &lin.a_x - &lin.a_y * ky.solve(&lin.k_x).unwrap();
    let b = &lin.a_y * ky.solve(&post.du).unwrap();
    let h = dt / substeps as f64;
    let eye = DMatrix::<f64>::identity(3 * ng, 3 * ng);
    let lu = (&eye - &a * (h / 2.0)).lu();
    let ad = lu.solve(&(&eye + &a * (h / 2.0))).unwrap();
    let bd = lu.solve(&(&b * h)).unwrap();
    let m: Vec<f64> = post.net.generators.iter().map(|g| g.m).collect();
    let ma: f64 = m.iter().sum();
    let mut x = DVector::<f64>::zeros(3 * ng);
    let mut out = vec![0.0];
    for _ in 0..(horizon / dt).round() as usize {
        for _ in 0..substeps {
            for (i, g) in post.net.generators.iter().enumerate() {
                let pm0 = post.sol.gen_p[i];
                x[2 * ng + i] = x[2 * ng + i].clamp(g.governor.p_m_min - pm0, g.governor.p_m_max - pm0);
            }
            x = &ad * &x + &bd;
        }
        out.push((0..ng).map(|i| m[i] * x[ng + i]).sum::<f64>() / ma);
    }
    out
}

/// Nadir and mean of the last second of a p.u. deviation trace, in Hz.
pub fn nadir_and_settling(w: &[f64], dt: f64, nominal_hz: f64) -> (f64, f64) {
    let n = (1.0 / dt).round() as usize;
    let nadir = w.iter().copied().fold(f64::INFINITY, f64::min);
    let settle = w[w.len() - n..].iter().sum::<f64>() / n as f64;
    (nominal_hz * (1.0 + nadir), nominal_hz * (1.0 + settle))
}

/// Bus power injections recomputed from the branch list alone.
pub fn injections(net: &Network, sol: &PowerFlowSolution) -> Vec<Complex64> {
    let n = net.n_bus();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in &net.branches {
        let (i, j) = (net.bus_index(br.from).unwrap(), net.bus_index(br.to).unwrap());
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        y[i][i] += ys + half;
        y[j][j] += ys + half;
        y[i][j] -= ys;
        y[j][i] -= ys;
    }
    let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(sol.v[i], sol.theta[i])).collect();
    (0..n)
        .map(|i| v[i] * (0..n).map(|j| y[i][j] * v[j]).sum::<Complex64>().conj())
        .collect()
}

/// Largest violation of the scheduled injections and voltage setpoints.
pub fn residual(net: &Network, sol: &PowerFlowSolution) -> f64 {
    let s = injections(net, sol);
    let gen_bus = net.gen_bus_indices();
    let mut worst: f64 = 0.0;
    for (i, bus) in net.buses.iter().enumerate() {
        let gen = gen_bus.iter().position(|&b| b == i);
        match bus.kind {
            BusKind::Pq => {
                worst = worst.max((s[i].re + bus.p_demand_0).abs());
                worst = worst.max((s[i].im + bus.q_demand_0).abs());
            }
            BusKind::Pv => {
                let p = net.generators[gen.unwrap()].p_dispatch;
                worst = worst.max((s[i].re + bus.p_demand_0 - p).abs());
                worst = worst.max((sol.v[i] - bus.v_nominal).abs());
            }
            BusKind::Slack => {
                worst = worst.max(sol.theta[i].abs()).max((sol.v[i] - bus.v_nominal).abs());
            }
        }
        if let Some(k) = gen {
            worst = worst.max((s[i].re + bus.p_demand_0 - sol.gen_p[k]).abs());
            worst = worst.max((s[i].im + bus.q_demand_0 - sol.gen_q[k]).abs());
        }
    }
    worst
}

pub fn central_difference(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    at: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let rows = f(at).len();
    let mut out = DMatrix::zeros(rows, at.len());
    for j in 0..at.len() {
        let (mut up, mut dn) = (at.clone(), at.clone());
        up[j] += h;
        dn[j] -= h;
        out.set_column(j, &((f(&up) - f(&dn)) / (2.0 * h)));
    }
    out
}
