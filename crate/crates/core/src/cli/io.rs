//! Trace files: `trace.csv` with per-block scalars, `points.jsonl` with the
//! coordinates (row `k = 0` holds the start and its projection).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Certificate, StopReason, Trace, TraceRecord};
use crate::error::{Error, Result};
use crate::primitives::Point;

pub const TRACE_CSV: &str = "trace.csv";
pub const POINTS_JSONL: &str = "points.jsonl";
pub const SUMMARY_JSON: &str = "summary.json";
pub const DIAGNOSTICS_JSON: &str = "diagnostics.json";

const HEADER: &str = "k,r,step_a,step_b,alpha,beta,multivalued_hit";

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize, Deserialize)]
struct PointsRow {
    k: usize,
    a: Point,
    b: Point,
    #[serde(default)]
    certificate: Certificate,
}

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.r),
            fmt_f64(r.step_a),
            fmt_f64(r.step_b),
            fmt_f64(r.alpha),
            fmt_f64(r.beta),
            u8::from(r.multivalued_hit)
        );
    }
    out
}

pub fn points_jsonl(trace: &Trace) -> Result<String> {
    let mut out = String::new();
    let start = PointsRow {
        k: 0,
        a: trace.start.clone(),
        b: trace.start_b.clone(),
        certificate: Certificate::Global,
    };
    out.push_str(&serde_json::to_string(&start)?);
    out.push('\n');
    for r in &trace.records {
        let row = PointsRow {
            k: r.k,
            a: r.a.clone(),
            b: r.b.clone(),
            certificate: r.certificate,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trace(dir: &Path, trace: &Trace) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TRACE_CSV), trace_csv(trace))?;
    fs::write(dir.join(POINTS_JSONL), points_jsonl(trace)?)?;
    Ok(())
}

fn parse_err(file: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{file} line {line}: {msg}"))
}

/// Reads a trace written by [`write_trace`].
pub fn read_trace(dir: &Path, stop_reason: StopReason) -> Result<Trace> {
    let csv = fs::read_to_string(dir.join(TRACE_CSV))?;
    let jsonl = fs::read_to_string(dir.join(POINTS_JSONL))?;
    let mut rows = jsonl.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = rows
        .next()
        .ok_or_else(|| parse_err(POINTS_JSONL, 1, "missing start row"))?;
    let start: PointsRow = serde_json::from_str(first).map_err(|e| parse_err(POINTS_JSONL, 1, e))?;
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(parse_err(TRACE_CSV, 1, format!("expected header `{HEADER}`"))),
    }
    let mut records = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(parse_err(TRACE_CSV, i + 1, "expected 7 columns"));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .trim()
                .parse()
                .map_err(|e| parse_err(TRACE_CSV, i + 1, format!("column {j}: {e}")))
        };
        let k: usize = fields[0].trim().parse().map_err(|e| parse_err(TRACE_CSV, i + 1, e))?;
        let (pi, pline) = rows
            .next()
            .ok_or_else(|| parse_err(POINTS_JSONL, i + 1, format!("missing row for k = {k}")))?;
        let p: PointsRow = serde_json::from_str(pline).map_err(|e| parse_err(POINTS_JSONL, pi + 1, e))?;
        if p.k != k {
            return Err(parse_err(
                POINTS_JSONL,
                pi + 1,
                format!("expected k = {k}, found {}", p.k),
            ));
        }
        records.push(TraceRecord {
            k,
            a: p.a,
            b: p.b,
            r: num(1)?,
            step_a: num(2)?,
            step_b: num(3)?,
            alpha: num(4)?,
            beta: num(5)?,
            multivalued_hit: fields[6].trim() == "1",
            certificate: p.certificate,
        });
    }
    Ok(Trace {
        records,
        stop_reason,
        start: start.a,
        start_b: start.b,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Parses `"1, 2.5, -3"` into a point.
pub fn parse_point(text: &str) -> Result<Point> {
    let coords: std::result::Result<Vec<f64>, _> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let coords = coords.map_err(|e| Error::Config(format!("cannot parse point `{text}`: {e}")))?;
    Point::new(coords)
}
