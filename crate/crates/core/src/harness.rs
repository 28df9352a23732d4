//! Benchmark bookkeeping: per-run records, geometric-mean summaries,
//! clamped scatter data and the independent solution checker.
//!
//! Results CSV (header included, one row per model and method, sorted by
//! model then method; empty cells mean "not available"):
//!
//! ```text
//! model,method,status,wall_seconds,pdhg_iterations,ipm_iterations,escalations,max_violation,primal_inf,dual_inf,rel_gap
//! ```
//!
//! Scatter CSV:
//!
//! ```text
//! model,method,relative_runtime,max_violation
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::LpError;
use crate::lp::{original_violation, GeneralLp, KktPoint, ViolationSummary};
use crate::pipeline::SolveReport;
use crate::solution::SolutionFile;
use crate::status::SolveStatus;

pub const RATIO_CAP: f64 = 100.0;
pub const VIOLATION_FLOOR: f64 = 1e-12;
pub const VIOLATION_CAP: f64 = 1e6;
/// IPM iteration count that counts as a fast solve.
pub const FAST_IPM_ITERATIONS: u64 = 10;
pub const COLD_BASELINE: &str = "ipm-cold";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub model: String,
    pub method: String,
    pub status: SolveStatus,
    pub wall_seconds: f64,
    pub pdhg_iterations: u64,
    pub ipm_iterations: u64,
    pub escalations: u64,
    pub max_violation: Option<f64>,
    pub primal_inf: Option<f64>,
    pub dual_inf: Option<f64>,
    pub rel_gap: Option<f64>,
}

impl ResultRecord {
    pub fn from_report(r: &SolveReport) -> Self {
        ResultRecord {
            model: r.model.clone(),
            method: r.method.clone(),
            status: r.status,
            wall_seconds: r.wall_seconds.max(0.0),
            pdhg_iterations: r.pdhg_iterations,
            ipm_iterations: r.ipm_iterations,
            escalations: r.escalations,
            max_violation: r.violation.map(|v| v.max_violation),
            primal_inf: r.violation.map(|v| v.primal_inf),
            dual_inf: r.violation.map(|v| v.dual_inf),
            rel_gap: r.violation.map(|v| v.rel_gap),
        }
    }

    /// Row for a model that could not be read or set up.
    pub fn error(model: &str, method: &str) -> Self {
        ResultRecord {
            model: model.to_string(),
            method: method.to_string(),
            status: SolveStatus::Error,
            wall_seconds: 0.0,
            pdhg_iterations: 0,
            ipm_iterations: 0,
            escalations: 0,
            max_violation: None,
            primal_inf: None,
            dual_inf: None,
            rel_gap: None,
        }
    }

    pub fn solved(&self) -> bool {
        self.status.is_optimal()
    }
}

pub fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| (&a.model, &a.method).cmp(&(&b.model, &b.method)));
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("csv output is not utf-8")]
    Utf8,
}

pub fn write_results_csv(records: &[ResultRecord]) -> Result<String, CsvError> {
    write_csv(records)
}

pub fn read_results_csv(text: &str) -> Result<Vec<ResultRecord>, CsvError> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows = rd.deserialize().collect::<Result<Vec<ResultRecord>, _>>()?;
    Ok(rows)
}

fn write_csv<T: Serialize>(rows: &[T]) -> Result<String, CsvError> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r)?;
    }
    let bytes = wr.into_inner().map_err(|e| CsvError::Csv(e.into_error().into()))?;
    String::from_utf8(bytes).map_err(|_| CsvError::Utf8)
}

/// Plain geometric mean; `None` for an empty slice.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let s: f64 = values.iter().map(|v| v.ln()).sum();
    Some((s / values.len() as f64).exp())
}

/// Runtime of each record relative to the fastest solved record of the same
/// model. `None` for unsolved records and for models nobody solved.
pub fn relative_runtimes(records: &[ResultRecord]) -> Vec<Option<f64>> {
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solved()) {
        let e = best.entry(&r.model).or_insert(f64::INFINITY);
        *e = e.min(r.wall_seconds);
    }
    records
        .iter()
        .map(|r| {
            if !r.solved() {
                return None;
            }
            let b = best[r.model.as_str()];
            // Two zero timings tie at 1.
            if r.wall_seconds == b {
                Some(1.0)
            } else {
                Some(r.wall_seconds / b)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub attempted: usize,
    pub solved: usize,
    pub relative_runtime: Option<f64>,
    /// Violations below [`VIOLATION_FLOOR`] enter the mean at the floor.
    pub mean_max_violation: Option<f64>,
    /// IPM iterations relative to the cold start over models both solved.
    pub ipm_iteration_ratio: Option<f64>,
    pub fast_ipm_solves: usize,
    pub escalations: u64,
}

impl SummaryRow {
    pub fn success_rate(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.solved as f64 / self.attempted as f64)
    }
}

/// One row per method, in order of first appearance.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let rel = relative_runtimes(records);
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let cold: BTreeMap<&str, u64> = records
        .iter()
        .filter(|r| r.method == COLD_BASELINE && r.solved())
        .map(|r| (r.model.as_str(), r.ipm_iterations))
        .collect();

    methods
        .into_iter()
        .map(|m| {
            let rows: Vec<(usize, &ResultRecord)> =
                records.iter().enumerate().filter(|(_, r)| r.method == m).collect();
            let solved: Vec<&(usize, &ResultRecord)> =
                rows.iter().filter(|(_, r)| r.solved()).collect();
            let runtimes: Vec<f64> = solved.iter().filter_map(|(i, _)| rel[*i]).collect();
            let violations: Vec<f64> = solved
                .iter()
                .filter_map(|(_, r)| r.max_violation.map(|v| v.max(VIOLATION_FLOOR)))
                .collect();
            let ratios: Vec<f64> = if m == COLD_BASELINE {
                Vec::new()
            } else {
                solved
                    .iter()
                    .filter(|(_, r)| r.ipm_iterations > 0)
                    .filter_map(|(_, r)| {
                        cold.get(r.model.as_str())
                            .filter(|&&c| c > 0)
                            .map(|&c| r.ipm_iterations as f64 / c as f64)
                    })
                    .collect()
            };
            SummaryRow {
                method: m.to_string(),
                attempted: rows.len(),
                solved: solved.len(),
                relative_runtime: geometric_mean(&runtimes),
                mean_max_violation: geometric_mean(&violations),
                ipm_iteration_ratio: geometric_mean(&ratios),
                fast_ipm_solves: solved
                    .iter()
                    .filter(|(_, r)| r.ipm_iterations > 0 && r.ipm_iterations <= FAST_IPM_ITERATIONS)
                    .count(),
                escalations: rows.iter().map(|(_, r)| r.escalations).sum(),
            }
        })
        .collect()
}

fn cell(v: Option<f64>, exp: bool) -> String {
    match v {
        None => "-".to_string(),
        Some(v) if exp => format!("{v:.2e}"),
        Some(v) => format!("{v:.2}"),
    }
}

/// Aligned text table: one column per method.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let labels = [
        "Models solved",
        "Success rate",
        "Relative runtime",
        "Mean max violation",
        "IPM iterations vs cold",
        "Solved in <= 10 IPM its",
        "Escalations",
    ];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("{}/{}", r.solved, r.attempted),
                cell(r.success_rate(), false),
                cell(r.relative_runtime, false),
                cell(r.mean_max_violation, true),
                cell(r.ipm_iteration_ratio, false),
                r.fast_ipm_solves.to_string(),
                r.escalations.to_string(),
            ]
        })
        .collect();
    let lw = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = rows
        .iter()
        .zip(&table)
        .map(|(r, col)| col.iter().map(|c| c.len()).max().unwrap_or(0).max(r.method.len()))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:lw$}", "");
    for (r, w) in rows.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", r.method);
    }
    out.push('\n');
    for (k, label) in labels.iter().enumerate() {
        let _ = write!(out, "{label:lw$}");
        for (col, w) in table.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", col[k]);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub model: String,
    pub method: String,
    pub relative_runtime: f64,
    pub max_violation: f64,
}

pub fn clamp_ratio(r: f64) -> f64 {
    r.min(RATIO_CAP)
}

pub fn clamp_violation(v: f64) -> f64 {
    v.clamp(VIOLATION_FLOOR, VIOLATION_CAP)
}

/// Scatter data with clamped ratios and violations. Unsolved runs sit at
/// the caps.
pub fn scatter_export(records: &[ResultRecord]) -> Vec<ScatterPoint> {
    relative_runtimes(records)
        .into_iter()
        .zip(records)
        .map(|(rel, r)| {
            let (ratio, viol) = match (rel, r.max_violation) {
                (Some(rel), Some(v)) => (clamp_ratio(rel), clamp_violation(v)),
                (Some(rel), None) => (clamp_ratio(rel), VIOLATION_CAP),
                (None, _) => (RATIO_CAP, VIOLATION_CAP),
            };
            ScatterPoint {
                model: r.model.clone(),
                method: r.method.clone(),
                relative_runtime: ratio,
                max_violation: viol,
            }
        })
        .collect()
}

pub fn write_scatter_csv(points: &[ScatterPoint]) -> Result<String, CsvError> {
    write_csv(points)
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("solution has no point")]
    NoPoint,
    #[error("{what}: solution has {got} entries, model has {expected}")]
    Count {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} entry {index} is '{got}', model expects '{expected}'")]
    Name {
        what: &'static str,
        index: usize,
        expected: String,
        got: String,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn matched(
    what: &'static str,
    names: &[String],
    vals: &[(String, f64)],
) -> Result<Vec<f64>, CheckError> {
    if names.len() != vals.len() {
        return Err(CheckError::Count {
            what,
            expected: names.len(),
            got: vals.len(),
        });
    }
    names
        .iter()
        .zip(vals)
        .enumerate()
        .map(|(index, (n, (got, v)))| {
            if n == got {
                Ok(*v)
            } else {
                Err(CheckError::Name {
                    what,
                    index,
                    expected: n.clone(),
                    got: got.clone(),
                })
            }
        })
        .collect()
}

/// Recomputes the violation of `sol` on `g` from the stored point alone.
pub fn check_solution(g: &GeneralLp, sol: &SolutionFile) -> Result<ViolationSummary, CheckError> {
    if sol.x.is_empty() && sol.y.is_empty() && !(g.col_names.is_empty() && g.row_names.is_empty()) {
        return Err(CheckError::NoPoint);
    }
    let pt = KktPoint {
        x: matched("x", &g.col_names, &sol.x)?,
        y: matched("y", &g.row_names, &sol.y)?,
        z: matched("z", &g.col_names, &sol.z)?,
    };
    Ok(original_violation(g, &pt)?)
}
