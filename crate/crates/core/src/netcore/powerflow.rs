use nalgebra::{DMatrix, DVector};

use super::{build_admittance, BusKind, Network, PowerFlowError};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Net injections computed from the network equations, per bus.
    pub p_net: Vec<f64>,
    pub q_net: Vec<f64>,
    /// Electrical output of every generator at the solved point.
    pub gen_p: Vec<f64>,
    pub gen_q: Vec<f64>,
    pub mismatch: f64,
    /// Number of mismatch evaluations; 1 means the start point already met the tolerance.
    pub iterations: usize,
}

impl PowerFlowSolution {
    /// Solution restricted to the generators that remain after removing `removed`.
    pub fn without_generators(&self, removed: &[usize]) -> PowerFlowSolution {
        let keep = |v: &Vec<f64>| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| !removed.contains(i))
                .map(|(_, x)| *x)
                .collect()
        };
        PowerFlowSolution {
            gen_p: keep(&self.gen_p),
            gen_q: keep(&self.gen_q),
            ..self.clone()
        }
    }
}

/// Bus injections `P_n = V_n Σ V_k (G cos θ_nk + B sin θ_nk)` and the matching `Q_n`.
pub(crate) fn bus_injections(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &[f64],
    theta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for k in 0..n {
            let (gik, bik) = (g[(i, k)], b[(i, k)]);
            if gik == 0.0 && bik == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[k]).sin_cos();
            p[i] += v[i] * v[k] * (gik * c + bik * s);
            q[i] += v[i] * v[k] * (gik * s - bik * c);
        }
    }
    (p, q)
}

/// Partial derivatives of bus injections: (dP/dθ, dP/dV, dQ/dθ, dQ/dV).
pub(crate) fn injection_jacobian(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &[f64],
    theta: &[f64],
) -> [DMatrix<f64>; 4] {
    let n = v.len();
    let (p, q) = bus_injections(g, b, v, theta);
    let mut dp_dt = DMatrix::zeros(n, n);
    let mut dp_dv = DMatrix::zeros(n, n);
    let mut dq_dt = DMatrix::zeros(n, n);
    let mut dq_dv = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let (gik, bik) = (g[(i, k)], b[(i, k)]);
            if gik == 0.0 && bik == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[k]).sin_cos();
            let a = gik * s - bik * c;
            let d = gik * c + bik * s;
            dp_dt[(i, k)] = v[i] * v[k] * a;
            dp_dv[(i, k)] = v[i] * d;
            dq_dt[(i, k)] = -v[i] * v[k] * d;
            dq_dv[(i, k)] = v[i] * a;
        }
        let (gii, bii) = (g[(i, i)], b[(i, i)]);
        dp_dt[(i, i)] = -q[i] - bii * v[i] * v[i];
        dp_dv[(i, i)] = p[i] / v[i] + gii * v[i];
        dq_dt[(i, i)] = p[i] - gii * v[i] * v[i];
        dq_dv[(i, i)] = q[i] / v[i] - bii * v[i];
    }
    [dp_dt, dp_dv, dq_dt, dq_dv]
}

/// Full Newton power flow in polar form from a flat start.
pub fn solve_power_flow(
    net: &Network,
    tol: f64,
    max_iter: usize,
) -> Result<PowerFlowSolution, PowerFlowError> {
    if !(tol > 0.0) {
        return Err(PowerFlowError::BadTolerance(tol));
    }
    let n = net.n_bus();
    let (g, b) = build_admittance(net).to_dense();
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    for (i, bus) in net.buses.iter().enumerate() {
        p_spec[i] -= bus.p_demand_0;
        q_spec[i] -= bus.q_demand_0;
    }
    let gen_bus = net.gen_bus_indices();
    for (gen, &i) in net.generators.iter().zip(&gen_bus) {
        p_spec[i] += gen.p_dispatch;
        q_spec[i] += gen.q_dispatch;
    }

    let ang: Vec<usize> = (0..n).filter(|&i| net.buses[i].kind != BusKind::Slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&i| net.buses[i].kind == BusKind::Pq).collect();
    let mut v: Vec<f64> = net
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_nominal })
        .collect();
    let mut theta = vec![0.0; n];

    let residual = |v: &[f64], theta: &[f64]| -> DVector<f64> {
        let (p, q) = bus_injections(&g, &b, v, theta);
        let mut r = DVector::zeros(ang.len() + mag.len());
        for (row, &i) in ang.iter().enumerate() {
            r[row] = p[i] - p_spec[i];
        }
        for (row, &i) in mag.iter().enumerate() {
            r[ang.len() + row] = q[i] - q_spec[i];
        }
        r
    };

    let mut iterations = 0;
    let mut mismatch;
    loop {
        iterations += 1;
        let r = residual(&v, &theta);
        mismatch = r.amax();
        if mismatch <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(PowerFlowError::NonConvergence {
                iterations,
                mismatch,
            });
        }
        let [dp_dt, dp_dv, dq_dt, dq_dv] = injection_jacobian(&g, &b, &v, &theta);
        let m = ang.len() + mag.len();
        let mut jac = DMatrix::zeros(m, m);
        for (r_i, &i) in ang.iter().enumerate() {
            for (c_j, &j) in ang.iter().enumerate() {
                jac[(r_i, c_j)] = dp_dt[(i, j)];
            }
            for (c_j, &j) in mag.iter().enumerate() {
                jac[(r_i, ang.len() + c_j)] = dp_dv[(i, j)];
            }
        }
        for (r_i, &i) in mag.iter().enumerate() {
            for (c_j, &j) in ang.iter().enumerate() {
                jac[(ang.len() + r_i, c_j)] = dq_dt[(i, j)];
            }
            for (c_j, &j) in mag.iter().enumerate() {
                jac[(ang.len() + r_i, ang.len() + c_j)] = dq_dv[(i, j)];
            }
        }
        let dx = jac
            .lu()
            .solve(&(-r))
            .ok_or(PowerFlowError::SingularJacobian(iterations))?;
        if dx.iter().any(|x| !x.is_finite()) {
            return Err(PowerFlowError::SingularJacobian(iterations));
        }
        for (k, &i) in ang.iter().enumerate() {
            theta[i] += dx[k];
        }
        for (k, &i) in mag.iter().enumerate() {
            v[i] += dx[ang.len() + k];
        }
    }
    for (i, &vi) in v.iter().enumerate() {
        if !(vi > 0.0) {
            return Err(PowerFlowError::NonPositiveVoltage {
                bus: net.buses[i].id,
                v: vi,
            });
        }
    }

    let (p_net, q_net) = bus_injections(&g, &b, &v, &theta);
    let mut gen_p: Vec<f64> = net.generators.iter().map(|g| g.p_dispatch).collect();
    let mut gen_q: Vec<f64> = net.generators.iter().map(|g| g.q_dispatch).collect();
    for (i, bus) in net.buses.iter().enumerate() {
        let at_bus: Vec<usize> = (0..net.n_gen()).filter(|&k| gen_bus[k] == i).collect();
        if at_bus.is_empty() {
            continue;
        }
        let weights = share_weights(&at_bus.iter().map(|&k| net.generators[k].p_dispatch).collect::<Vec<_>>());
        if bus.kind == BusKind::Slack {
            let total = p_net[i] + bus.p_demand_0;
            for (&k, w) in at_bus.iter().zip(&weights) {
                gen_p[k] = total * w;
            }
        }
        if bus.kind != BusKind::Pq {
            let total = q_net[i] + bus.q_demand_0;
            for (&k, w) in at_bus.iter().zip(&weights) {
                gen_q[k] = total * w;
            }
        }
    }

    Ok(PowerFlowSolution {
        v,
        theta,
        p_net,
        q_net,
        gen_p,
        gen_q,
        mismatch,
        iterations,
    })
}

fn share_weights(p: &[f64]) -> Vec<f64> {
    let sum: f64 = p.iter().sum();
    if sum.abs() > 1e-12 {
        p.iter().map(|x| x / sum).collect()
    } else {
        vec![1.0 / p.len() as f64; p.len()]
    }
}
