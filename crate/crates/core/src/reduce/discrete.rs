use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{ReduceError, SafrModel};

/// Bilinear (trapezoidal) discretization of a reduced model with the input
/// held constant over each step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSafr {
    pub a_d: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub dt: f64,
    pub omega0: f64,
    pub dp_max: f64,
    pub dp_min: f64,
    pub bus_ids: Vec<u32>,
}

impl DiscreteSafr {
    pub fn n_bus(&self) -> usize {
        self.bus_ids.len()
    }
}

pub fn discretize(model: &SafrModel, dt: f64) -> Result<DiscreteSafr, ReduceError> {
    if !(dt > 0.0) {
        return Err(ReduceError::BadTimestep(dt));
    }
    let n = model.a_r.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let lhs = &eye - &model.a_r * (dt / 2.0);
    let lu = lhs.lu();
    let a_d = lu
        .solve(&(&eye + &model.a_r * (dt / 2.0)))
        .ok_or(ReduceError::SingularDiscretization)?;
    let b_d = lu
        .solve(&(&model.b_r * dt))
        .ok_or(ReduceError::SingularDiscretization)?;
    Ok(DiscreteSafr {
        a_d,
        b_d,
        dt,
        omega0: model.omega0,
        dp_max: model.dp_max,
        dp_min: model.dp_min,
        bus_ids: model.bus_ids.clone(),
    })
}

/// State trajectory `x[0..=K]` of `x[k+1] = a_d·sat(x[k]) + b_d·u[k]`, where
/// `sat` clamps the governor channel to its limits. `x[0] = 0`.
pub fn simulate_reduced_states(
    model: &DiscreteSafr,
    u: &[DVector<f64>],
) -> Result<Vec<[f64; 3]>, ReduceError> {
    let width = model.b_d.ncols();
    let mut out = Vec::with_capacity(u.len() + 1);
    let mut x = DVector::<f64>::zeros(3);
    out.push([0.0; 3]);
    for (k, uk) in u.iter().enumerate() {
        if uk.len() != width {
            return Err(ReduceError::Dimension(format!(
                "input {k} has {} entries, model expects {width}",
                uk.len()
            )));
        }
        let mut sat = x.clone();
        sat[2] = sat[2].clamp(model.dp_min, model.dp_max);
        x = &model.a_d * sat + &model.b_d * uk;
        out.push([x[0], x[1], x[2]]);
    }
    Ok(out)
}

/// Reduced frequency deviation `Δω_r[k]`, p.u. of nominal.
pub fn simulate_reduced(model: &DiscreteSafr, u: &[DVector<f64>]) -> Result<Vec<f64>, ReduceError> {
    Ok(simulate_reduced_states(model, u)?.iter().map(|x| x[1]).collect())
}

#[derive(Serialize)]
struct Dump<'a> {
    dt: f64,
    a_r: Vec<Vec<f64>>,
    b_r: Vec<Vec<f64>>,
    a_d: Vec<Vec<f64>>,
    b_d: Vec<Vec<f64>>,
    bus_ids: &'a [u32],
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// JSON dump of the continuous and discrete matrices, row-major.
pub fn dump_model(model: &SafrModel, disc: &DiscreteSafr) -> String {
    serde_json::to_string_pretty(&Dump {
        dt: disc.dt,
        a_r: rows(&model.a_r),
        b_r: rows(&model.b_r),
        a_d: rows(&disc.a_d),
        b_d: rows(&disc.b_d),
        bus_ids: &model.bus_ids,
    })
    .expect("model serializes")
        + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: DMatrix<f64>, b: DMatrix<f64>) -> SafrModel {
        SafrModel {
            a_r: a,
            b_r: b,
            c_out: [0.0, 1.0, 0.0],
            omega0: 376.99,
            m_a: 1.0,
            r_agg: 0.05,
            t: 0.1,
            dp_max: 10.0,
            dp_min: -10.0,
            bus_ids: vec![1],
        }
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let m = model(DMatrix::zeros(3, 3), DMatrix::zeros(3, 2));
        let d = discretize(&m, 0.01).unwrap();
        assert_eq!(d.a_d, DMatrix::identity(3, 3));
    }

    #[test]
    fn scalar_closed_form() {
        let mut a = DMatrix::zeros(1, 1);
        a[(0, 0)] = -1.0;
        let mut m = model(a, DMatrix::from_element(1, 1, 1.0));
        m.a_r = DMatrix::from_element(1, 1, -1.0);
        let d = discretize(&m, 0.01).unwrap();
        assert!((d.a_d[(0, 0)] - 0.995 / 1.005).abs() < 1e-15);
        assert!((d.b_d[(0, 0)] - 0.01 / 1.005).abs() < 1e-15);
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 377.0, 0.0, 0.0, -0.1, 0.05, 0.0, -200.0, -10.0]);
        let d = discretize(&model(a, DMatrix::from_element(3, 2, 0.3)), 0.01).unwrap();
        let w = simulate_reduced(&d, &vec![DVector::zeros(2); 50]).unwrap();
        assert!(w.iter().all(|x| *x == 0.0));
        assert!(simulate_reduced(&d, &[DVector::zeros(3)]).is_err());
    }
}
