//! Rendering of run summaries.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::pipeline::TraceRow;
use crate::runner::RunSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    JsonLines,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            _ => Err(HarnessError::Config(format!(
                "unknown format '{s}' (expected table, csv or json-lines)"
            ))),
        }
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn std_cell(v: f64, defined: bool) -> String {
    if defined {
        format!("{v:.2}")
    } else {
        format!("{v:.2}*")
    }
}

/// Aligned text table; coverage in percent, widths in standardized label
/// units. A trailing `*` marks a std from a single replicate.
pub fn render_table(rows: &[RunSummary]) -> String {
    let header = ["method", "coverage %", "± std", "width", "± std", "empty %", "runs"];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                pct(r.coverage_mean),
                std_cell(100.0 * r.coverage_std, r.std_defined),
                format!("{:.3}", r.width_mean),
                std_cell(r.width_std, r.std_defined),
                pct(r.empty_rate),
                r.replicates.len().to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: Vec<&str>| {
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, header.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, rule.iter().map(String::as_str).collect());
    for row in &body {
        line(&mut out, row.iter().map(String::as_str).collect());
    }
    if rows.iter().any(|r| !r.std_defined) {
        out.push_str("* single replicate, std not defined\n");
    }
    out
}

pub fn render_csv(rows: &[RunSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |source| HarnessError::Csv {
        path: "<memory>".into(),
        source,
    };
    w.write_record([
        "method",
        "mode",
        "members",
        "replicates",
        "coverage_mean",
        "coverage_std",
        "width_mean",
        "width_std",
        "empty_rate",
        "std_defined",
    ])
    .map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.mode.clone(),
            r.members.join("+"),
            r.replicates.len().to_string(),
            r.coverage_mean.to_string(),
            r.coverage_std.to_string(),
            r.width_mean.to_string(),
            r.width_std.to_string(),
            r.empty_rate.to_string(),
            r.std_defined.to_string(),
        ])
        .map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum JsonLine<'a> {
    Replicate {
        method: &'a str,
        #[serde(flatten)]
        rep: &'a crate::runner::ReplicateSummary,
    },
    Aggregate {
        method: &'a str,
        mode: &'a str,
        members: &'a [String],
        replicates: usize,
        coverage_mean: f64,
        coverage_std: f64,
        width_mean: f64,
        width_std: f64,
        empty_rate: f64,
        seconds_per_1000: f64,
        std_defined: bool,
    },
}

/// One `replicate` line per replicate and method, then one `aggregate`
/// line per method.
pub fn render_json_lines(rows: &[RunSummary]) -> String {
    let mut out = String::new();
    let mut push = |line: JsonLine<'_>| {
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    };
    for r in rows {
        for rep in &r.replicates {
            push(JsonLine::Replicate { method: &r.method, rep });
        }
    }
    for r in rows {
        push(JsonLine::Aggregate {
            method: &r.method,
            mode: &r.mode,
            members: &r.members,
            replicates: r.replicates.len(),
            coverage_mean: r.coverage_mean,
            coverage_std: r.coverage_std,
            width_mean: r.width_mean,
            width_std: r.width_std,
            empty_rate: r.empty_rate,
            seconds_per_1000: r.seconds_per_1000,
            std_defined: r.std_defined,
        });
    }
    out
}

pub fn render(rows: &[RunSummary], format: Format) -> Result<String> {
    match format {
        Format::Table => Ok(render_table(rows)),
        Format::Csv => render_csv(rows),
        Format::JsonLines => Ok(render_json_lines(rows)),
    }
}

/// Trace rows as CSV (`step,node,mean,var,threshold,lower,upper,y,covered,width`).
pub fn render_trace_csv(rows: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|source| HarnessError::Csv {
            path: "<memory>".into(),
            source,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_trace_json_lines(rows: &[TraceRow]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("plain data serializes") + "\n")
        .collect()
}
