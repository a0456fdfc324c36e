//! Experiment reports and their CSV, JSON and plot-data encodings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{TaskConfig, TaskKind};
use crate::error::{Error, Result};
use crate::montecarlo::Outcome;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "l1dev";

pub const CSV_HEADER: &str =
    "task_id,kind,family,S,n,delta,D,threshold,epsilon,point,ci_low,ci_high,outcome,trials,seed";

/// The inputs that determine a report's content. Worker count is not part of
/// it: results are identical for any number of workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub master_seed: u64,
    pub ci_level: f64,
    pub band_alpha: f64,
    pub tasks: Vec<TaskConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task_id: String,
    pub kind: TaskKind,
    /// `multinomial`, `dirichlet` or `limit`.
    pub family: String,
    #[serde(rename = "S")]
    pub s: usize,
    pub n: Option<u64>,
    pub delta: Option<f64>,
    #[serde(rename = "D")]
    pub d: f64,
    pub threshold: Option<f64>,
    pub epsilon: Option<f64>,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub outcome: Option<Outcome>,
    pub trials: u64,
    pub seed: u64,
    /// Reference value: closed-form mean for asymptotic-mean rows, exact
    /// probability for tail rows computed with `exact = true`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Devroye regime flag for falsify rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub rows: Vec<ResultRow>,
    /// Wall-clock time; only recorded on request since it breaks byte-identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl Report {
    pub fn new(config: ConfigEcho, rows: Vec<ResultRow>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            rows,
            runtime_ms: None,
        }
    }

    pub fn any_violated(&self) -> bool {
        self.rows.iter().any(|r| r.outcome == Some(Outcome::Violated))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid report JSON: {e}")))?;
        if report.schema != SCHEMA_VERSION {
            return Err(Error::Usage(format!("unsupported report schema {}", report.schema)));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Usage(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

pub fn emit_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(report).into_bytes(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn emit_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let fields = [
            r.task_id.clone(),
            r.kind.to_string(),
            r.family.clone(),
            r.s.to_string(),
            opt(r.n),
            opt(r.delta),
            r.d.to_string(),
            opt(r.threshold),
            opt(r.epsilon),
            r.point.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            opt(r.outcome),
            r.trials.to_string(),
            r.seed.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Whitespace-separated columns for external plotting tools.
///
/// Rows of a task are grouped into blocks (one per `(S, n)` pair, or one per
/// `n` for sweeps over `S`), separated by a blank line.
pub fn emit_plot_data(report: &Report, task_id: &str) -> Result<Vec<u8>> {
    let rows: Vec<&ResultRow> = report.rows.iter().filter(|r| r.task_id == task_id).collect();
    let Some(first) = rows.first() else {
        return Err(Error::Usage(format!("no rows for task '{task_id}'")));
    };
    let kind = first.kind;
    if kind != TaskKind::Quantiles && rows.len() < 2 {
        return Err(Error::Usage(format!("task '{task_id}' has a single row and no curve to plot")));
    }

    let mut out = String::new();
    let _ = writeln!(out, "# {TOOL_NAME} plot data: task {task_id} ({kind})");
    let columns = match kind {
        TaskKind::Quantiles => "threshold cdf cdf_low cdf_high",
        TaskKind::Tail => "threshold point ci_low ci_high",
        TaskKind::Falsify => "delta point ci_low ci_high claimed_delta",
        TaskKind::AsymptoticMean => "S mean expected ci_low ci_high",
    };
    let _ = writeln!(out, "# columns: {columns}");

    let group_key = |r: &ResultRow| match kind {
        TaskKind::AsymptoticMean => (0, 0),
        _ => (r.s, r.n.unwrap_or(0)),
    };
    let mut current = None;
    for r in &rows {
        let key = group_key(r);
        if current != Some(key) {
            if current.is_some() {
                out.push('\n');
            }
            if kind != TaskKind::AsymptoticMean {
                let _ = writeln!(out, "# S={} n={}", r.s, opt(r.n));
            }
            current = Some(key);
        }
        let line = match kind {
            TaskKind::Quantiles | TaskKind::Tail => {
                format!("{} {} {} {}", opt(r.threshold), r.point, r.ci_low, r.ci_high)
            }
            TaskKind::Falsify => {
                let delta = opt(r.delta);
                format!("{delta} {} {} {} {delta}", r.point, r.ci_low, r.ci_high)
            }
            TaskKind::AsymptoticMean => {
                format!("{} {} {} {} {}", r.s, r.point, opt(r.expected), r.ci_low, r.ci_high)
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo() -> ConfigEcho {
        ConfigEcho { master_seed: 1, ci_level: 0.95, band_alpha: 0.05, tasks: vec![] }
    }

    fn falsify_row(delta: f64, outcome: Outcome) -> ResultRow {
        ResultRow {
            task_id: "f".into(),
            kind: TaskKind::Falsify,
            family: "multinomial".into(),
            s: 50,
            n: Some(10_000),
            delta: Some(delta),
            d: 1.0,
            threshold: Some(0.0244),
            epsilon: Some(0.0244),
            point: 1.0,
            ci_low: 0.9996,
            ci_high: 1.0,
            outcome: Some(outcome),
            trials: 10_000,
            seed: 1,
            expected: None,
            bound_valid: Some(true),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = emit_report(&Report::new(echo(), vec![]), Format::Csv);
        assert_eq!(String::from_utf8(csv).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn falsify_row_csv() {
        let report = Report::new(echo(), vec![falsify_row(0.05, Outcome::Violated)]);
        let csv = String::from_utf8(emit_report(&report, Format::Csv)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 15);
        assert!(lines[1].contains(",Violated,"));
        assert!(report.any_violated());
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut row = falsify_row(0.1, Outcome::Consistent);
        row.point = 0.1 + 0.2;
        row.ci_low = 1e-300;
        let report = Report::new(echo(), vec![row, falsify_row(0.05, Outcome::Inconclusive)]);
        let a = emit_report(&report, Format::Json);
        let back = Report::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
        assert_eq!(back, report);
        assert_eq!(emit_report(&back, Format::Json), a);
    }

    #[test]
    fn plot_data_shapes() {
        let report = Report::new(echo(), vec![falsify_row(0.1, Outcome::Violated), falsify_row(0.05, Outcome::Violated)]);
        let text = String::from_utf8(emit_plot_data(&report, "f").unwrap()).unwrap();
        assert!(text.contains("# columns: delta point ci_low ci_high claimed_delta"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0].split_whitespace().count(), 5);

        let single = Report::new(echo(), vec![falsify_row(0.1, Outcome::Violated)]);
        assert!(matches!(emit_plot_data(&single, "f"), Err(Error::Usage(_))));
        assert!(matches!(emit_plot_data(&single, "missing"), Err(Error::Usage(_))));
    }
}
