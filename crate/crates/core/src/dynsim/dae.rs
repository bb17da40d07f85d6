use nalgebra::{DMatrix, DVector};

use crate::netcore::{
    build_admittance, compute_internal_emf, derive_zip_params, machine_injection, Network,
    PowerFlowSolution, ZipLoad,
};
use crate::netcore::powerflow::{bus_injections, injection_jacobian};

/// Semi-explicit DAE `ẋ = f(x, y)`, `0 = g(x, y)` with
/// `x = [δ (N_g), ω (N_g, p.u. of ω0), P_m (N_g)]` and `y = [θ (N), V (N)]`.
///
/// The algebraic residual is `P_calc − ΣPe + P_d(V) − P_extra` (and the
/// same for Q), so a positive `extra` is a net injection.
#[derive(Debug, Clone)]
pub struct DaeSystem {
    pub omega0: f64,
    pub g_bus: DMatrix<f64>,
    pub b_bus: DMatrix<f64>,
    pub gen_bus: Vec<usize>,
    pub m: Vec<f64>,
    pub d: Vec<f64>,
    pub xdp: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub p_ref: Vec<f64>,
    pub online: Vec<bool>,
    pub loads: Vec<ZipLoad>,
    pub extra_p: Vec<f64>,
    pub extra_q: Vec<f64>,
}

impl DaeSystem {
    /// Builds the system at the power-flow equilibrium and returns it with
    /// `(x0, y0)`. `p_ref` is left at the dispatch; callers that need an exact
    /// equilibrium re-solve `y` and reset `p_ref` to the electrical output.
    pub fn at_equilibrium(
        net: &Network,
        sol: &PowerFlowSolution,
    ) -> Result<(DaeSystem, DVector<f64>, DVector<f64>), crate::netcore::NetworkError> {
        let emf = compute_internal_emf(net, sol)?;
        let loads = derive_zip_params(net, sol)?;
        let (g_bus, b_bus) = build_admittance(net).to_dense();
        let ng = net.n_gen();
        let n = net.n_bus();
        let sys = DaeSystem {
            omega0: net.omega0(),
            g_bus,
            b_bus,
            gen_bus: net.gen_bus_indices(),
            m: net.generators.iter().map(|g| g.m).collect(),
            d: net.generators.iter().map(|g| g.d).collect(),
            xdp: net.generators.iter().map(|g| g.x_d_prime).collect(),
            r: net.generators.iter().map(|g| g.governor.r).collect(),
            t: net.generators.iter().map(|g| g.governor.t).collect(),
            e: emf.iter().map(|m| m.e_internal).collect(),
            p_ref: sol.gen_p.clone(),
            online: vec![true; ng],
            loads,
            extra_p: vec![0.0; n],
            extra_q: vec![0.0; n],
        };
        let mut x = DVector::zeros(3 * ng);
        for i in 0..ng {
            x[i] = emf[i].delta_0;
            x[2 * ng + i] = sol.gen_p[i];
        }
        let mut y = DVector::zeros(2 * n);
        for k in 0..n {
            y[k] = sol.theta[k];
            y[n + k] = sol.v[k];
        }
        Ok((sys, x, y))
    }

    pub fn n_gen(&self) -> usize {
        self.m.len()
    }

    pub fn n_bus(&self) -> usize {
        self.loads.len()
    }

    /// Electrical `(Pe, Qe)` of machine `i`; zero when offline.
    pub fn machine_pq(&self, i: usize, x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
        if !self.online[i] {
            return (0.0, 0.0);
        }
        let n = self.n_bus();
        let k = self.gen_bus[i];
        machine_injection(self.e[i], x[i], y[n + k], y[k], self.xdp[i])
    }

    pub fn f(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let ng = self.n_gen();
        let mut out = DVector::zeros(3 * ng);
        for i in 0..ng {
            if !self.online[i] {
                continue;
            }
            let (w, pm) = (x[ng + i], x[2 * ng + i]);
            let (pe, _) = self.machine_pq(i, x, y);
            out[i] = self.omega0 * w;
            out[ng + i] = (-self.d[i] * w + pm - pe) / self.m[i];
            out[2 * ng + i] = (-w / self.r[i] - pm + self.p_ref[i]) / self.t[i];
        }
        out
    }

    pub fn g(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n_bus();
        let theta: Vec<f64> = y.rows(0, n).iter().copied().collect();
        let v: Vec<f64> = y.rows(n, n).iter().copied().collect();
        let (p, q) = bus_injections(&self.g_bus, &self.b_bus, &v, &theta);
        let mut out = DVector::zeros(2 * n);
        for k in 0..n {
            out[k] = p[k] + self.loads[k].p_at(v[k]) - self.extra_p[k];
            out[n + k] = q[k] + self.loads[k].q_at(v[k]) - self.extra_q[k];
        }
        for i in 0..self.n_gen() {
            let (pe, qe) = self.machine_pq(i, x, y);
            let k = self.gen_bus[i];
            out[k] -= pe;
            out[n + k] -= qe;
        }
        out
    }

    /// Analytic Jacobians `(f_x, f_y, g_x, g_y)`.
    pub fn jacobians(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let ng = self.n_gen();
        let n = self.n_bus();
        let theta: Vec<f64> = y.rows(0, n).iter().copied().collect();
        let v: Vec<f64> = y.rows(n, n).iter().copied().collect();
        let [dp_dt, dp_dv, dq_dt, dq_dv] = injection_jacobian(&self.g_bus, &self.b_bus, &v, &theta);

        let mut fx = DMatrix::zeros(3 * ng, 3 * ng);
        let mut fy = DMatrix::zeros(3 * ng, 2 * n);
        let mut gx = DMatrix::zeros(2 * n, 3 * ng);
        let mut gy = DMatrix::zeros(2 * n, 2 * n);
        gy.view_mut((0, 0), (n, n)).copy_from(&dp_dt);
        gy.view_mut((0, n), (n, n)).copy_from(&dp_dv);
        gy.view_mut((n, 0), (n, n)).copy_from(&dq_dt);
        gy.view_mut((n, n), (n, n)).copy_from(&dq_dv);
        for k in 0..n {
            gy[(k, n + k)] += self.loads[k].dp_dv(v[k]);
            gy[(n + k, n + k)] += self.loads[k].dq_dv(v[k]);
        }

        for i in 0..ng {
            if !self.online[i] {
                continue;
            }
            let k = self.gen_bus[i];
            let (e, xd, vk) = (self.e[i], self.xdp[i], v[k]);
            let (s, c) = (x[i] - theta[k]).sin_cos();
            let dpe_dd = vk * e * c / xd;
            let dpe_dv = e * s / xd;
            let dqe_dd = -vk * e * s / xd;
            let dqe_dv = (e * c - 2.0 * vk) / xd;

            fx[(i, ng + i)] = self.omega0;
            fx[(ng + i, i)] = -dpe_dd / self.m[i];
            fx[(ng + i, ng + i)] = -self.d[i] / self.m[i];
            fx[(ng + i, 2 * ng + i)] = 1.0 / self.m[i];
            fx[(2 * ng + i, ng + i)] = -1.0 / (self.r[i] * self.t[i]);
            fx[(2 * ng + i, 2 * ng + i)] = -1.0 / self.t[i];

            fy[(ng + i, k)] = dpe_dd / self.m[i];
            fy[(ng + i, n + k)] = -dpe_dv / self.m[i];

            gx[(k, i)] -= dpe_dd;
            gx[(n + k, i)] -= dqe_dd;

            gy[(k, k)] += dpe_dd;
            gy[(k, n + k)] -= dpe_dv;
            gy[(n + k, k)] += dqe_dd;
            gy[(n + k, n + k)] -= dqe_dv;
        }
        (fx, fy, gx, gy)
    }

    /// Newton solve of `g(x, y) = 0` for `y` with `x` held fixed.
    pub fn solve_algebraic(
        &self,
        x: &DVector<f64>,
        y: &mut DVector<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<f64, f64> {
        let mut res = self.g(x, y);
        for _ in 0..max_iter {
            if res.amax() <= tol {
                return Ok(res.amax());
            }
            let (_, _, _, gy) = self.jacobians(x, y);
            let dy = match gy.lu().solve(&res) {
                Some(dy) => dy,
                None => return Err(res.amax()),
            };
            *y -= dy;
            res = self.g(x, y);
        }
        if res.amax() <= tol {
            Ok(res.amax())
        } else {
            Err(res.amax())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{fixtures::two_bus, solve_power_flow};

    fn fd_check(sys: &DaeSystem, x: &DVector<f64>, y: &DVector<f64>) {
        let (fx, fy, gx, gy) = sys.jacobians(x, y);
        let h = 1e-6;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b.abs().max(1.0);
        for j in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let df = (sys.f(&xp, y) - sys.f(&xm, y)) / (2.0 * h);
            let dg = (sys.g(&xp, y) - sys.g(&xm, y)) / (2.0 * h);
            for i in 0..df.len() {
                assert!(close(fx[(i, j)], df[i]), "fx[{i},{j}]");
            }
            for i in 0..dg.len() {
                assert!(close(gx[(i, j)], dg[i]), "gx[{i},{j}]");
            }
        }
        for j in 0..y.len() {
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[j] += h;
            ym[j] -= h;
            let df = (sys.f(x, &yp) - sys.f(x, &ym)) / (2.0 * h);
            let dg = (sys.g(x, &yp) - sys.g(x, &ym)) / (2.0 * h);
            for i in 0..df.len() {
                assert!(close(fy[(i, j)], df[i]), "fy[{i},{j}]");
            }
            for i in 0..dg.len() {
                assert!(close(gy[(i, j)], dg[i]), "gy[{i},{j}]");
            }
        }
    }

    #[test]
    fn equilibrium_residuals_vanish() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let (sys, x, y) = DaeSystem::at_equilibrium(&net, &sol).unwrap();
        assert!(sys.g(&x, &y).amax() < 1e-10);
        assert!(sys.f(&x, &y).amax() < 1e-9);
    }

    #[test]
    fn jacobians_match_finite_differences_off_equilibrium() {
        let net = two_bus(0.9, 0.3, 0.02);
        let sol = solve_power_flow(&net, 1e-12, 50).unwrap();
        let (sys, mut x, mut y) = DaeSystem::at_equilibrium(&net, &sol).unwrap();
        x[0] += 0.05;
        x[1] = -0.01;
        y[3] -= 0.03;
        fd_check(&sys, &x, &y);
    }
}
