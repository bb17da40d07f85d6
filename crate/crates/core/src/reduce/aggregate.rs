use nalgebra::DMatrix;

use super::{LinearizedDae, ReduceError};
use crate::netcore::{GovernorParams, Network};

/// Below this reciprocal condition number `K_y` is treated as singular.
pub const RCOND_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SlowCoherencyTransform {
    /// Inertia weights `m_i / Σm`.
    pub c_row: Vec<f64>,
    /// Rows `e_j − e_k` for every machine `j ≠ k`.
    pub g_mat: DMatrix<f64>,
    pub m_a: f64,
    pub k: usize,
}

/// Transform with the highest-inertia machine as reference (lowest index on ties).
pub fn build_transform(net: &Network) -> Result<SlowCoherencyTransform, ReduceError> {
    let k = net
        .generators
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
            Some((_, m)) if m >= g.m => best,
            _ => Some((i, g.m)),
        })
        .map(|(i, _)| i)
        .ok_or(ReduceError::NoGenerators)?;
    build_transform_with_reference(net, k)
}

pub fn build_transform_with_reference(
    net: &Network,
    k: usize,
) -> Result<SlowCoherencyTransform, ReduceError> {
    let ng = net.n_gen();
    if ng == 0 {
        return Err(ReduceError::NoGenerators);
    }
    assert!(k < ng, "reference machine {k} out of range");
    let m_a = net.total_inertia();
    let c_row = net.generators.iter().map(|g| g.m / m_a).collect();
    let mut g_mat = DMatrix::zeros(ng - 1, ng);
    for (row, j) in (0..ng).filter(|&j| j != k).enumerate() {
        g_mat[(row, k)] = -1.0;
        g_mat[(row, j)] = 1.0;
    }
    Ok(SlowCoherencyTransform { c_row, g_mat, m_a, k })
}

/// The 3-state reduced model `Δẋ_r = a_r Δx_r + b_r Δu` with
/// `Δx_r = [Δδ_r, Δω_r (p.u.), ΔP_mr]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SafrModel {
    pub a_r: DMatrix<f64>,
    pub b_r: DMatrix<f64>,
    pub c_out: [f64; 3],
    pub omega0: f64,
    pub m_a: f64,
    pub r_agg: f64,
    pub t: f64,
    /// Aggregate mechanical power deviation limits relative to the operating point.
    pub dp_max: f64,
    pub dp_min: f64,
    pub bus_ids: Vec<u32>,
}

impl SafrModel {
    pub fn n_bus(&self) -> usize {
        self.bus_ids.len()
    }
}

/// Aggregated governor droop `1/R = Σ 1/R_i`, common time constant and
/// summed headroom below/above the dispatch `pm0`.
pub(crate) fn aggregate_governors(
    governors: &[GovernorParams],
    pm0: &[f64],
) -> Result<(f64, f64, f64, f64), ReduceError> {
    let t = governors.first().ok_or(ReduceError::NoGenerators)?.t;
    if let Some(g) = governors.iter().find(|g| (g.t - t).abs() > 1e-12) {
        return Err(ReduceError::UnequalTimeConstants(t, g.t));
    }
    let inv_r: f64 = governors.iter().map(|g| 1.0 / g.r).sum();
    let dp_max = governors.iter().zip(pm0).map(|(g, p)| g.p_m_max - p).sum();
    let dp_min = governors.iter().zip(pm0).map(|(g, p)| g.p_m_min - p).sum();
    Ok((1.0 / inv_r, t, dp_max, dp_min))
}

/// Reciprocal 2-norm condition number.
pub(crate) fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

pub fn aggregate(
    lin: &LinearizedDae,
    xf: &SlowCoherencyTransform,
    governors: &[GovernorParams],
) -> Result<SafrModel, ReduceError> {
    let ng = lin.n_gen();
    let n = lin.n_bus();
    let pm0: Vec<f64> = lin.x0.rows(2 * ng, ng).iter().copied().collect();
    if governors.len() != ng || xf.c_row.len() != ng {
        return Err(ReduceError::Dimension(format!(
            "{ng} machines in the linearization, {} governors, {} weights",
            governors.len(),
            xf.c_row.len()
        )));
    }
    let (r_agg, t, dp_max, dp_min) = aggregate_governors(governors, &pm0)?;
    let rc = rcond(&lin.k_y);
    if rc < RCOND_MIN {
        return Err(ReduceError::SingularKy(rc));
    }

    let inv_r_sum = 1.0 / r_agg;
    let mut p = DMatrix::zeros(3, 3 * ng);
    let mut q = DMatrix::zeros(3 * ng, 3);
    for i in 0..ng {
        p[(0, i)] = xf.c_row[i];
        p[(1, ng + i)] = xf.c_row[i];
        p[(2, 2 * ng + i)] = 1.0;
        q[(i, 0)] = 1.0;
        q[(ng + i, 1)] = 1.0;
        q[(2 * ng + i, 2)] = (1.0 / governors[i].r) / inv_r_sum;
    }
    let arx = &p * &lin.a_x * &q;
    let ary = &p * &lin.a_y;
    let krx = &lin.k_x * &q;
    let lu = lin.k_y.clone().lu();
    let ky_inv_krx = lu.solve(&krx).ok_or(ReduceError::SingularKy(rc))?;
    let a_r = &arx - &ary * ky_inv_krx;
    let b_r = lu
        .solve(&DMatrix::identity(2 * n, 2 * n))
        .map(|inv| &ary * inv)
        .ok_or(ReduceError::SingularKy(rc))?;
    Ok(SafrModel {
        a_r,
        b_r,
        c_out: [0.0, 1.0, 0.0],
        omega0: lin.omega0,
        m_a: xf.m_a,
        r_agg,
        t,
        dp_max,
        dp_min,
        bus_ids: lin.bus_ids.clone(),
    })
}
