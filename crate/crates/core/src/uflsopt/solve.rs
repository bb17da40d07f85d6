use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::model::MilpModel;
use super::mps::{column_name, export_mps};
use super::OptError;

pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    /// One value per model column; empty unless a point is available.
    pub values: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    pub time_limit_s: f64,
    pub mip_rel_gap: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            time_limit_s: 300.0,
            mip_rel_gap: 1e-4,
        }
    }
}

/// Something that can solve a [`MilpModel`].
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    /// `start`, when given, is a full column assignment the backend may use as an incumbent.
    fn solve_raw(&self, model: &MilpModel, limits: &SolveLimits, start: Option<&[f64]>) -> Result<MilpSolution, OptError>;
}

/// Solves through the backend, then re-evaluates every row and bound of an
/// optimal answer independently of the solver.
pub fn solve(model: &MilpModel, backend: &dyn SolverBackend, limits: &SolveLimits) -> Result<MilpSolution, OptError> {
    solve_with_start(model, backend, limits, None)
}

/// [`solve`] with an optional starting assignment.
pub fn solve_with_start(
    model: &MilpModel,
    backend: &dyn SolverBackend,
    limits: &SolveLimits,
    start: Option<&[f64]>,
) -> Result<MilpSolution, OptError> {
    let clock = Instant::now();
    let mut sol = backend.solve_raw(model, limits, start)?;
    sol.wall_time_s = clock.elapsed().as_secs_f64();
    if sol.status == SolveStatus::Optimal {
        if sol.values.len() != model.variables.len() {
            return Err(OptError::Backend(format!(
                "{} returned {} values for {} columns",
                backend.name(),
                sol.values.len(),
                model.variables.len()
            )));
        }
        let (viol, what) = model.max_violation(&sol.values);
        if viol > FEASIBILITY_TOL {
            return Err(OptError::AuditFailed(format!(
                "solution from {} violates {what} by {viol:.3e}",
                backend.name()
            )));
        }
        sol.objective = model.objective_value(&sol.values);
    }
    Ok(sol)
}

/// Writes `<name> <value>` lines under a `# status:` header, using the MPS
/// column names.
pub fn write_solution_file(path: impl AsRef<Path>, sol: &MilpSolution) -> std::io::Result<()> {
    let status = match sol.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimeLimit => "time_limit",
    };
    let mut out = format!("# status: {status}\n# objective: {}\n", sol.objective);
    for (j, v) in sol.values.iter().enumerate() {
        out.push_str(&format!("{} {v:e}\n", column_name(j)));
    }
    std::fs::write(path, out)
}

/// Parses a solution file against the model's MPS column names. Columns
/// absent from the file are zero. Without a status line, a file with values
/// counts as optimal and an empty one as infeasible.
pub fn read_solution_file(text: &str, model: &MilpModel) -> Result<MilpSolution, OptError> {
    let n = model.variables.len();
    let mut values = vec![0.0; n];
    let mut status = None;
    let mut seen = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(s) = comment.trim().strip_prefix("status:") {
                status = Some(match s.trim().to_ascii_lowercase().as_str() {
                    "optimal" => SolveStatus::Optimal,
                    "infeasible" => SolveStatus::Infeasible,
                    "time_limit" | "timelimit" => SolveStatus::TimeLimit,
                    other => return Err(OptError::Backend(format!("unknown status {other:?}"))),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(OptError::Backend(format!("solution line {}: expected `<name> <value>`", lineno + 1)));
        };
        let j = name
            .strip_prefix('C')
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&j| j >= 1 && j <= n)
            .ok_or_else(|| OptError::Backend(format!("solution line {}: unknown column {name}", lineno + 1)))?;
        values[j - 1] = val
            .parse()
            .map_err(|_| OptError::Backend(format!("solution line {}: bad value {val}", lineno + 1)))?;
        seen += 1;
    }
    let status = status.unwrap_or(if seen > 0 { SolveStatus::Optimal } else { SolveStatus::Infeasible });
    if seen == 0 {
        values.clear();
    }
    Ok(MilpSolution {
        status,
        objective: if values.is_empty() { f64::NAN } else { model.objective_value(&values) },
        values,
        wall_time_s: 0.0,
    })
}

/// Runs an external program on an exported MPS file. The command template
/// is split on whitespace; `{mps}` and `{sol}` are replaced by the file paths.
#[derive(Debug, Clone)]
pub struct SubprocessBackend {
    pub template: String,
    pub workdir: PathBuf,
}

static SOLVE_SEQ: AtomicUsize = AtomicUsize::new(0);

impl SubprocessBackend {
    pub fn new(template: impl Into<String>) -> Self {
        SubprocessBackend {
            template: template.into(),
            workdir: std::env::temp_dir(),
        }
    }
}

impl SolverBackend for SubprocessBackend {
    fn name(&self) -> &str {
        "subprocess"
    }

    fn solve_raw(&self, model: &MilpModel, limits: &SolveLimits, _start: Option<&[f64]>) -> Result<MilpSolution, OptError> {
        let tag = format!("ufls-{}-{}", std::process::id(), SOLVE_SEQ.fetch_add(1, Ordering::Relaxed));
        let mps = self.workdir.join(format!("{tag}.mps"));
        let sol = self.workdir.join(format!("{tag}.sol"));
        export_mps(model, &mps).map_err(|e| OptError::Backend(format!("writing {}: {e}", mps.display())))?;
        let args: Vec<String> = self
            .template
            .split_whitespace()
            .map(|a| {
                a.replace("{mps}", &mps.display().to_string())
                    .replace("{sol}", &sol.display().to_string())
                    .replace("{time_limit}", &limits.time_limit_s.to_string())
            })
            .collect();
        let Some((program, rest)) = args.split_first() else {
            return Err(OptError::Backend("empty solver command".into()));
        };
        let output = Command::new(program)
            .args(rest)
            .output()
            .map_err(|e| OptError::Backend(format!("cannot run {program}: {e}")))?;
        let _ = std::fs::remove_file(&mps);
        if !output.status.success() {
            let _ = std::fs::remove_file(&sol);
            return Err(OptError::Backend(format!(
                "{program} exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let text = std::fs::read_to_string(&sol).map_err(|e| OptError::Backend(format!("reading {}: {e}", sol.display())));
        let _ = std::fs::remove_file(&sol);
        read_solution_file(&text?, model)
    }
}

#[cfg(feature = "highs")]
pub use highs_backend::HighsBackend;

#[cfg(feature = "highs")]
mod highs_backend {
    use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense as Objective};

    use super::*;
    use crate::uflsopt::model::{Sense, VarKind};

    /// In-process HiGHS. After the branch and bound finishes, the binaries are
    /// rounded and fixed and the remaining LP is re-solved, which removes the
    /// integrality slack HiGHS tolerates.
    #[derive(Debug, Clone, Default)]
    pub struct HighsBackend {
        /// Print the solver log to stdout.
        pub log: bool,
    }

    impl HighsBackend {
        fn run(
            &self,
            model: &MilpModel,
            fixed: Option<&[f64]>,
            start: Option<&[f64]>,
            limits: &SolveLimits,
        ) -> (HighsModelStatus, Vec<f64>) {
            let mut pb = RowProblem::default();
            let mut cost = vec![0.0; model.variables.len()];
            for &(j, a) in &model.objective {
                cost[j] = a;
            }
            let cols: Vec<_> = model
                .variables
                .iter()
                .enumerate()
                .map(|(j, v)| match (v.kind, fixed) {
                    (VarKind::Binary, Some(x)) => pb.add_column(cost[j], x[j].round()..=x[j].round()),
                    (VarKind::Binary, None) => pb.add_integer_column(cost[j], v.lb..=v.ub),
                    (VarKind::Continuous, _) => pb.add_column(cost[j], v.lb..=v.ub),
                })
                .collect();
            for c in &model.constraints {
                let row: Vec<_> = c.coeffs.iter().map(|&(j, a)| (cols[j], a)).collect();
                match c.sense {
                    Sense::Le => pb.add_row(..=c.rhs, &row),
                    Sense::Ge => pb.add_row(c.rhs.., &row),
                    Sense::Eq => pb.add_row(c.rhs..=c.rhs, &row),
                }
            }
            let mut m = pb.optimise(Objective::Minimise);
            if self.log {
                m.set_option("output_flag", true);
                m.set_option("log_to_console", true);
            } else {
                m.make_quiet();
            }
            m.set_option("random_seed", 0);
            m.set_option("threads", 1);
            m.set_option("time_limit", limits.time_limit_s);
            m.set_option("mip_rel_gap", limits.mip_rel_gap);
            if fixed.is_some() {
                m.set_option("primal_feasibility_tolerance", 1e-9);
            }
            if let Some(x) = start.filter(|x| x.len() == model.variables.len()) {
                m.set_solution(Some(x), None, None, None);
            }
            let solved = m.solve();
            let status = solved.status();
            let has_point = matches!(solved.primal_solution_status(), HighsSolutionStatus::Feasible);
            let values = if has_point { solved.get_solution().columns().to_vec() } else { Vec::new() };
            (status, values)
        }
    }

    impl SolverBackend for HighsBackend {
        fn name(&self) -> &str {
            "highs"
        }

        fn solve_raw(&self, model: &MilpModel, limits: &SolveLimits, start: Option<&[f64]>) -> Result<MilpSolution, OptError> {
            let (status, mut values) = self.run(model, None, start, limits);
            let status = match status {
                HighsModelStatus::Optimal => SolveStatus::Optimal,
                HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
                HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
                other => return Err(OptError::Backend(format!("HiGHS stopped with {other:?}"))),
            };
            if status == SolveStatus::Infeasible {
                values.clear();
            }
            if !values.is_empty() && model.n_binary() > 0 {
                let (lp_status, polished) = self.run(model, Some(&values), None, limits);
                if lp_status == HighsModelStatus::Optimal && polished.len() == values.len() {
                    values = polished;
                }
            }
            Ok(MilpSolution {
                status,
                objective: if values.is_empty() { f64::NAN } else { model.objective_value(&values) },
                values,
                wall_time_s: 0.0,
            })
        }
    }
}

/// Solves an MPS file with HiGHS and writes a solution file in the format
/// [`read_solution_file`] parses, naming columns as the MPS file does.
#[cfg(feature = "highs")]
pub fn solve_mps_file(mps: &Path, sol: &Path, limits: &SolveLimits) -> Result<SolveStatus, OptError> {
    use std::ffi::{CStr, CString};
    use std::os::raw::c_char;

    use highs_sys::*;

    let path = CString::new(mps.display().to_string()).map_err(|_| OptError::Backend("path contains a NUL byte".into()))?;
    let opt = |name: &str| CString::new(name).expect("option names have no NUL");
    // SAFETY: `h` is a live instance for the whole block and every buffer
    // handed to HiGHS is sized from the model it reports.
    let (status, named) = unsafe {
        let h = Highs_create();
        let run = (|| {
            Highs_setBoolOptionValue(h, opt("output_flag").as_ptr(), 0);
            Highs_setIntOptionValue(h, opt("threads").as_ptr(), 1);
            Highs_setIntOptionValue(h, opt("random_seed").as_ptr(), 0);
            Highs_setDoubleOptionValue(h, opt("time_limit").as_ptr(), limits.time_limit_s);
            Highs_setDoubleOptionValue(h, opt("mip_rel_gap").as_ptr(), limits.mip_rel_gap);
            if Highs_readModel(h, path.as_ptr()) == STATUS_ERROR {
                return Err(OptError::Backend(format!("HiGHS cannot read {}", mps.display())));
            }
            if Highs_run(h) == STATUS_ERROR {
                return Err(OptError::Backend("HiGHS run failed".into()));
            }
            let status = match Highs_getModelStatus(h) {
                MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => SolveStatus::Optimal,
                MODEL_STATUS_INFEASIBLE | MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => SolveStatus::Infeasible,
                MODEL_STATUS_REACHED_TIME_LIMIT => SolveStatus::TimeLimit,
                other => return Err(OptError::Backend(format!("HiGHS stopped with model status {other}"))),
            };
            let mut primal: HighsInt = 0;
            Highs_getIntInfoValue(h, opt("primal_solution_status").as_ptr(), &mut primal);
            if status == SolveStatus::Infeasible || primal != SOLUTION_STATUS_FEASIBLE {
                return Ok((status, Vec::new()));
            }
            let n = Highs_getNumCol(h) as usize;
            let m = Highs_getNumRow(h) as usize;
            let mut col = vec![0.0; n];
            let (mut cd, mut rv, mut rd) = (vec![0.0; n], vec![0.0; m], vec![0.0; m]);
            Highs_getSolution(h, col.as_mut_ptr(), cd.as_mut_ptr(), rv.as_mut_ptr(), rd.as_mut_ptr());
            let mut buf = vec![0 as c_char; 1024];
            let named = (0..n)
                .map(|j| {
                    Highs_getColName(h, j as HighsInt, buf.as_mut_ptr());
                    (CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned(), col[j])
                })
                .collect::<Vec<_>>();
            Ok((status, named))
        })();
        Highs_destroy(h);
        run?
    };
    let tag = match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimeLimit => "time_limit",
    };
    let mut out = format!("# status: {tag}\n");
    for (name, v) in &named {
        out.push_str(&format!("{name} {v:e}\n"));
    }
    std::fs::write(sol, out).map_err(|e| OptError::Backend(format!("writing {}: {e}", sol.display())))?;
    Ok(status)
}

/// The default in-process backend, if compiled in.
pub fn default_backend() -> Option<Box<dyn SolverBackend>> {
    #[cfg(feature = "highs")]
    {
        Some(Box::new(HighsBackend::default()))
    }
    #[cfg(not(feature = "highs"))]
    {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uflsopt::model::{Sense, VarKind};

    fn toy(infeasible: bool) -> MilpModel {
        let mut m = MilpModel::new("TOY");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0);
        let b = m.add_var("b", VarKind::Binary, 0.0, 1.0);
        m.add_row("r0", &[(x, 1.0), (b, 1.0)], Sense::Ge, 1.5);
        if infeasible {
            m.add_row("r1", &[(x, 1.0)], Sense::Le, 0.0);
            m.add_row("r2", &[(b, 1.0)], Sense::Le, 0.0);
        }
        m.set_objective(&[(x, 1.0), (b, 0.2)]);
        m
    }

    #[test]
    fn solution_file_round_trip() {
        let m = toy(false);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.sol");
        let sol = MilpSolution {
            status: SolveStatus::Optimal,
            objective: 0.7,
            values: vec![0.5, 1.0],
            wall_time_s: 0.0,
        };
        write_solution_file(&path, &sol).unwrap();
        let back = read_solution_file(&std::fs::read_to_string(&path).unwrap(), &m).unwrap();
        assert_eq!(back.values, sol.values);
        assert_eq!(back.status, SolveStatus::Optimal);
        assert!(read_solution_file("C0000009 1\n", &m).is_err());
        assert_eq!(read_solution_file("", &m).unwrap().status, SolveStatus::Infeasible);
    }

    struct Fixed(Vec<f64>);

    impl SolverBackend for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn solve_raw(&self, _: &MilpModel, _: &SolveLimits, _: Option<&[f64]>) -> Result<MilpSolution, OptError> {
            Ok(MilpSolution {
                status: SolveStatus::Optimal,
                objective: 0.0,
                values: self.0.clone(),
                wall_time_s: 0.0,
            })
        }
    }

    #[test]
    fn audit_rejects_infeasible_claims() {
        let m = toy(false);
        let limits = SolveLimits::default();
        assert!(matches!(solve(&m, &Fixed(vec![0.0, 0.0]), &limits), Err(OptError::AuditFailed(_))));
        let ok = solve(&m, &Fixed(vec![0.5, 1.0]), &limits).unwrap();
        assert!((ok.objective - 0.7).abs() < 1e-15);
    }

    #[cfg(feature = "highs")]
    #[test]
    fn highs_solves_toys() {
        let limits = SolveLimits::default();
        let sol = solve(&toy(false), &HighsBackend::default(), &limits).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 0.7).abs() < 1e-9, "{}", sol.objective);
        let bad = solve(&toy(true), &HighsBackend::default(), &limits).unwrap();
        assert_eq!(bad.status, SolveStatus::Infeasible);
        let mut empty = MilpModel::new("E");
        empty.add_var("x", VarKind::Continuous, 0.0, 1.0);
        let zero = solve(&empty, &HighsBackend::default(), &limits).unwrap();
        assert_eq!((zero.status, zero.objective), (SolveStatus::Optimal, 0.0));
    }
}
