use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Network;

/// Sparse complex bus-admittance matrix indexed by bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Nonzero entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Complex64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    fn add(&mut self, i: usize, j: usize, y: Complex64) {
        *self.entries.entry((i, j)).or_default() += y;
    }

    /// Dense conductance and susceptance matrices.
    pub fn to_dense(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut g = DMatrix::zeros(self.n, self.n);
        let mut b = DMatrix::zeros(self.n, self.n);
        for (&(i, j), y) in &self.entries {
            g[(i, j)] = y.re;
            b[(i, j)] = y.im;
        }
        (g, b)
    }
}

pub fn build_admittance(net: &Network) -> AdmittanceMatrix {
    let mut y = AdmittanceMatrix {
        n: net.n_bus(),
        entries: BTreeMap::new(),
    };
    for br in &net.branches {
        let f = net.bus_index(br.from).expect("validated branch");
        let t = net.bus_index(br.to).expect("validated branch");
        let ys = br.series_admittance();
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        y.add(f, f, ys + half);
        y.add(t, t, ys + half);
        y.add(f, t, -ys);
        y.add(t, f, -ys);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn single_branch_stamp() {
        let net = two_bus(1.0, 0.0, 0.01);
        let y = build_admittance(&net);
        let ys = Complex64::new(0.01, 0.1).inv();
        assert_eq!(y.get(0, 0), ys);
        assert_eq!(y.get(1, 1), ys);
        assert_eq!(y.get(0, 1), -ys);
        assert_eq!(y.get(1, 0), -ys);
    }

    #[test]
    fn parallel_branches_superpose() {
        let mut net = two_bus(1.0, 0.0, 0.01);
        let mut second = net.branches[0].clone();
        second.r = 0.02;
        second.x = 0.3;
        net.branches.push(second);
        let y = build_admittance(&net);
        let y1 = Complex64::new(0.01, 0.1).inv();
        let y2 = Complex64::new(0.02, 0.3).inv();
        assert!((y.get(0, 1) + y1 + y2).norm() < 1e-15);
    }

    #[test]
    fn diagonal_equals_offdiagonal_sum_plus_shunt() {
        let mut net = two_bus(1.0, 0.0, 0.01);
        net.branches[0].b_shunt = 0.04;
        let y = build_admittance(&net);
        let row_sum = y.get(0, 0) + y.get(0, 1);
        assert!((row_sum - Complex64::new(0.0, 0.02)).norm() < 1e-15);
        assert_eq!(y.get(0, 1), y.get(1, 0));
    }
}
