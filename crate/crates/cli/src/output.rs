use std::fs;
use std::io::Write;
use std::path::Path;

use qanon::stats::wilson_interval;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::Format;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything one invocation produces, in both output shapes.
#[derive(Debug, Default)]
pub struct Output {
    records: Vec<Value>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    /// Human-readable lines for stderr.
    pub notes: Vec<String>,
}

impl Output {
    pub fn with_header(header: &[&str]) -> Self {
        Output {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    /// Adds an NDJSON record; `record` names its type.
    pub fn record(&mut self, record: &str, body: impl Serialize) {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("record".into(), json!(record));
        match serde_json::to_value(body).expect("records serialize") {
            Value::Object(fields) => obj.extend(fields),
            other => {
                obj.insert("value".into(), other);
            }
        }
        self.records.push(Value::Object(obj));
    }

    pub fn row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut s = String::new();
                for r in &self.records {
                    s.push_str(&r.to_string());
                    s.push('\n');
                }
                Ok(s)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).map_err(CliError::io)?;
                for r in &self.rows {
                    w.write_record(r).map_err(CliError::io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::io(e.into_error()))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
        }
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> Result<(), CliError> {
        let text = self.render(format)?;
        match path {
            Some(p) => fs::write(p, text)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(CliError::io),
        }
    }
}

/// Success count with its 3σ Wilson interval and, when known, the value
/// theory predicts.
#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    pub metric: String,
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub expected: Option<f64>,
}

impl Metric {
    pub const CSV_HEADER: [&'static str; 8] = [
        "command",
        "metric",
        "successes",
        "trials",
        "rate",
        "ci_low",
        "ci_high",
        "expected",
    ];

    pub fn new(
        metric: impl Into<String>,
        successes: u64,
        trials: u64,
        expected: Option<f64>,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, 3.0);
        Metric {
            metric: metric.into(),
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            expected,
        }
    }

    pub fn csv_row(&self, command: &str) -> Vec<String> {
        vec![
            command.to_string(),
            self.metric.clone(),
            self.successes.to_string(),
            self.trials.to_string(),
            self.rate.to_string(),
            self.ci_low.to_string(),
            self.ci_high.to_string(),
            self.expected.map(|e| e.to_string()).unwrap_or_default(),
        ]
    }

    pub fn note(&self) -> String {
        let expected = self
            .expected
            .map(|e| format!(", expected {e:.6}"))
            .unwrap_or_default();
        format!(
            "{}: {}/{} = {:.6} (3σ CI [{:.6}, {:.6}]{expected})",
            self.metric, self.successes, self.trials, self.rate, self.ci_low, self.ci_high
        )
    }
}

/// Adds the summary record, CSV rows and stderr notes for `metrics`.
pub fn summarize(out: &mut Output, command: &str, metrics: Vec<Metric>) {
    for m in &metrics {
        out.row(m.csv_row(command));
        out.notes.push(m.note());
    }
    out.record("summary", json!({ "command": command, "metrics": metrics }));
}
