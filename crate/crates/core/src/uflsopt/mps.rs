use std::fmt::Write as _;
use std::path::Path;

use super::model::{MilpModel, Sense, VarKind};

pub const OBJECTIVE_ROW: &str = "COST";

/// MPS name of column `j`.
pub fn column_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

/// MPS name of row `i`.
pub fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

/// Shortest rendering with at most 12 significant digits.
pub fn format_number(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e12 {
        return format!("{}", x as i64);
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    if (-4..12).contains(&exp) {
        let plain = format!("{}", mantissa.parse::<f64>().unwrap() * 10f64.powi(exp));
        let reparsed: f64 = plain.parse().unwrap();
        let digits = plain.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
        if digits <= 12 && reparsed == format!("{mantissa}e{exp}").parse::<f64>().unwrap() {
            return plain;
        }
    }
    format!("{mantissa}e{exp}")
}

fn field(out: &mut String, code: &str, name: &str, entries: &[(&str, f64)]) {
    let _ = write!(out, " {code:<2} {name:<8}");
    for (k, (row, val)) in entries.iter().enumerate() {
        let sep = if k == 0 { "  " } else { "   " };
        let _ = write!(out, "{sep}{row:<8}  {:>12}", format_number(*val));
    }
    out.push('\n');
}

/// Fixed-format MPS text. Columns and rows get generated 8-character names;
/// binaries are declared with `BV` bounds.
pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { &model.name };
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJECTIVE_ROW}");
    for (i, c) in model.constraints.iter().enumerate() {
        let code = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {code}  {}", row_name(i));
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            by_col[j].push((i, a));
        }
    }
    let mut obj = vec![0.0; model.variables.len()];
    for &(j, a) in &model.objective {
        obj[j] = a;
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in by_col.iter().enumerate() {
        let col = column_name(j);
        let mut cells: Vec<(String, f64)> = Vec::new();
        if obj[j] != 0.0 {
            cells.push((OBJECTIVE_ROW.to_string(), obj[j]));
        }
        cells.extend(entries.iter().map(|&(i, a)| (row_name(i), a)));
        if cells.is_empty() {
            cells.push((OBJECTIVE_ROW.to_string(), 0.0));
        }
        for pair in cells.chunks(2) {
            let refs: Vec<(&str, f64)> = pair.iter().map(|(r, v)| (r.as_str(), *v)).collect();
            field(&mut out, "", &col, &refs);
        }
    }

    out.push_str("RHS\n");
    let rhs: Vec<(String, f64)> = model
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.rhs != 0.0)
        .map(|(i, c)| (row_name(i), c.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        let refs: Vec<(&str, f64)> = pair.iter().map(|(r, v)| (r.as_str(), *v)).collect();
        field(&mut out, "", "RHS", &refs);
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let col = column_name(j);
        let bound = |out: &mut String, code: &str, val: Option<f64>| {
            let _ = write!(out, " {code} BND       {col:<8}");
            if let Some(val) = val {
                let _ = write!(out, "  {:>12}", format_number(val));
            }
            out.push('\n');
        };
        if v.kind == VarKind::Binary && v.lb == 0.0 && v.ub == 1.0 {
            bound(&mut out, "BV", None);
            continue;
        }
        if v.kind == VarKind::Binary {
            let _ = writeln!(out, " BV BND       {col:<8}");
        }
        match (v.lb.is_finite(), v.ub.is_finite()) {
            (true, true) if v.lb == v.ub => bound(&mut out, "FX", Some(v.lb)),
            (false, false) => bound(&mut out, "FR", None),
            (false, true) => {
                bound(&mut out, "MI", None);
                bound(&mut out, "UP", Some(v.ub));
            }
            (true, ub_finite) => {
                if v.lb != 0.0 || (ub_finite && v.ub < 0.0) {
                    bound(&mut out, "LO", Some(v.lb));
                }
                if ub_finite {
                    bound(&mut out, "UP", Some(v.ub));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_mps(model: &MilpModel, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, write_mps(model))
}
