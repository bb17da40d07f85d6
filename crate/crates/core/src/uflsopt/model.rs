use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable index, no duplicates, no zeros.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Solver-agnostic MILP: minimize `objective · x` subject to the rows and bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Sparse objective, sorted by variable index.
    pub objective: Vec<(usize, f64)>,
    index: HashMap<String, usize>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: f64, ub: f64) -> usize {
        let name = name.into();
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            VarKind::Continuous => (lb, ub),
        };
        let id = self.variables.len();
        let previous = self.index.insert(name.clone(), id);
        assert!(previous.is_none(), "duplicate variable name {name}");
        self.variables.push(Variable { name, kind, lb, ub });
        id
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs.to_vec();
        sorted.sort_by_key(|c| c.0);
        for (v, a) in sorted {
            assert!(v < self.variables.len(), "row references undeclared variable {v}");
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: merged,
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, coeffs: &[(usize, f64)]) {
        let mut obj = coeffs.to_vec();
        obj.sort_by_key(|c| c.0);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (v, a) in obj {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|c| c.1 != 0.0);
        self.objective = merged;
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn n_binary(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// The LP left when every binary is fixed at its rounded value in `x`.
    pub fn with_binaries_fixed(&self, x: &[f64]) -> MilpModel {
        let mut lp = self.clone();
        for (v, &val) in lp.variables.iter_mut().zip(x) {
            if v.kind == VarKind::Binary {
                v.kind = VarKind::Continuous;
                v.lb = val.round();
                v.ub = val.round();
            }
        }
        lp
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|(v, a)| a * x[*v]).sum()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row].coeffs.iter().map(|(v, a)| a * x[*v]).sum()
    }

    /// Largest violation over rows, bounds and integrality, with a description.
    pub fn max_violation(&self, x: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        let mut note = |viol: f64, what: &dyn Fn() -> String| {
            if viol > worst.0 {
                worst = (viol, what());
            }
        };
        for (i, v) in self.variables.iter().enumerate() {
            let val = x[i];
            note(v.lb - val, &|| format!("lower bound of {}", v.name));
            note(val - v.ub, &|| format!("upper bound of {}", v.name));
            if v.kind == VarKind::Binary {
                note((val - val.round()).abs(), &|| format!("integrality of {}", v.name));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(r, x);
            let viol = match c.sense {
                Sense::Le => act - c.rhs,
                Sense::Ge => c.rhs - act,
                Sense::Eq => (act - c.rhs).abs(),
            };
            note(viol, &|| format!("row {}", c.name));
        }
        worst
    }
}
