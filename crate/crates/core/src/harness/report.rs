use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Scheme;
use super::criteria::criteria_met;
use super::{io_err, HarnessError};
use crate::dynsim::Metrics;

/// Per-scenario result file written by the pipeline and read back by [`cmd_report`].
pub const REPORT_FILE: &str = "report.json";
const SUMMARY_MD: &str = "summary.md";
const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub scenario: String,
    pub scheme: Scheme,
    pub solver_time_s: Option<f64>,
    pub nadir_hz: Option<f64>,
    pub settling_hz: Option<f64>,
    pub shed_pct: Option<f64>,
    pub criteria_met: bool,
}

impl ComparisonRow {
    pub fn new(scenario: &str, scheme: Scheme, solver_time_s: Option<f64>, metrics: Option<&Metrics>) -> Self {
        ComparisonRow {
            scenario: scenario.to_string(),
            scheme,
            solver_time_s,
            nadir_hz: metrics.map(|m| m.nadir_hz),
            settling_hz: metrics.map(|m| m.settling_hz),
            shed_pct: metrics.map(|m| m.total_shed_pct),
            criteria_met: metrics.is_some_and(|m| criteria_met(m.nadir_hz, m.settling_hz)),
        }
    }

    /// Table cells. A scheme that misses the criteria shows dashes for its
    /// nadir and settling frequency.
    fn cells(&self) -> [String; 7] {
        let num = |x: Option<f64>, digits: usize| x.map_or("-".to_string(), |v| format!("{v:.digits$}"));
        let stable = |x: Option<f64>| if self.criteria_met { num(x, 3) } else { "-".to_string() };
        [
            self.scenario.clone(),
            self.scheme.to_string(),
            num(self.solver_time_s, 2),
            stable(self.nadir_hz),
            stable(self.settling_hz),
            num(self.shed_pct, 2),
            if self.criteria_met { "yes" } else { "no" }.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

const HEADER: [&str; 7] = [
    "scenario",
    "scheme",
    "solver_time_s",
    "nadir_hz",
    "settling_hz",
    "shed_pct",
    "criteria_met",
];

impl ComparisonReport {
    pub fn row(&self, scenario: &str, scheme: Scheme) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.scheme == scheme)
    }

    pub fn all_met(&self) -> bool {
        self.rows.iter().all(|r| r.criteria_met)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Artifact {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn to_markdown(&self) -> String {
        let titles = [
            "Scenario",
            "Scheme",
            "Solver time (s)",
            "Nadir (Hz)",
            "Settling (Hz)",
            "Load shed (%)",
            "Criteria met",
        ];
        let mut out = format!("| {} |\n", titles.join(" | "));
        out += &format!("|{}\n", "---|".repeat(titles.len()));
        for r in &self.rows {
            out += &format!("| {} |\n", r.cells().join(" | "));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.cells()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// Collects every `report.json` below `dir` in path order and writes the
/// combined `summary.md` and `summary.csv` into `dir`.
pub fn cmd_report(dir: &Path) -> Result<ComparisonReport, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::Artifact {
            path: dir.display().to_string(),
            reason: "results directory does not exist".into(),
        });
    }
    let mut report = ComparisonReport::default();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| HarnessError::Artifact {
            path: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        if entry.file_type().is_file() && entry.file_name() == REPORT_FILE {
            report.rows.extend(ComparisonReport::load(entry.path())?.rows);
        }
    }
    let md = dir.join(SUMMARY_MD);
    std::fs::write(&md, report.to_markdown()).map_err(io_err(&md))?;
    let csv = dir.join(SUMMARY_CSV);
    std::fs::write(&csv, report.to_csv()).map_err(io_err(&csv))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(nadir: f64, settling: f64, shed: f64) -> Metrics {
        Metrics {
            nadir_hz: nadir,
            settling_hz: settling,
            total_shed_pct: shed,
        }
    }

    fn sample() -> ComparisonReport {
        ComparisonReport {
            rows: vec![
                ComparisonRow::new("base", Scheme::Safr, Some(12.5), Some(&metrics(58.4, 59.62, 17.1))),
                ComparisonRow::new("base", Scheme::Sfr, Some(3.25), Some(&metrics(57.1, 58.9, 9.0))),
                ComparisonRow::new("base", Scheme::Conventional, None, Some(&metrics(58.6, 59.9, 25.0))),
            ],
        }
    }

    #[test]
    fn criteria_flag_follows_the_metrics() {
        let r = sample();
        assert!(r.rows[0].criteria_met && !r.rows[1].criteria_met && r.rows[2].criteria_met);
        assert!(!ComparisonRow::new("x", Scheme::Safr, Some(1.0), None).criteria_met);
    }

    #[test]
    fn failed_scheme_gets_dashes() {
        let md = sample().to_markdown();
        let sfr = md.lines().find(|l| l.contains("| sfr |")).unwrap();
        assert_eq!(sfr, "| base | sfr | 3.25 | - | - | 9.00 | no |");
        let conv = md.lines().find(|l| l.contains("conventional")).unwrap();
        assert_eq!(conv, "| base | conventional | - | 58.600 | 59.900 | 25.00 | yes |");
    }

    #[test]
    fn empty_dir_gives_a_header_only_table() {
        let dir = tempfile::tempdir().unwrap();
        let r = cmd_report(dir.path()).unwrap();
        assert!(r.rows.is_empty());
        let csv = std::fs::read_to_string(dir.path().join(SUMMARY_CSV)).unwrap();
        assert_eq!(csv, format!("{}\n", HEADER.join(",")));
        assert_eq!(std::fs::read_to_string(dir.path().join(SUMMARY_MD)).unwrap().lines().count(), 2);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b", "a"] {
            std::fs::create_dir(dir.path().join(name)).unwrap();
            sample().save(&dir.path().join(name).join(REPORT_FILE)).unwrap();
        }
        let first = cmd_report(dir.path()).unwrap();
        let bytes = std::fs::read(dir.path().join(SUMMARY_MD)).unwrap();
        let second = cmd_report(dir.path()).unwrap();
        assert_eq!(first, second);
        assert_eq!(bytes, std::fs::read(dir.path().join(SUMMARY_MD)).unwrap());
        assert_eq!(first.rows.len(), 6);
    }

    #[test]
    fn missing_dir_and_bad_artifacts_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(cmd_report(&dir.path().join("nope")).is_err());
        std::fs::write(dir.path().join(REPORT_FILE), "{not json").unwrap();
        assert!(matches!(cmd_report(dir.path()), Err(HarnessError::Artifact { .. })));
    }
}
