//! Trace files: CSV and a JSON envelope, floats with 17 significant digits.

use std::io::Write;

use lazydual::{RunTrace, TraceRow};
use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "iter,subopt,consensus,messages,grad_evals,skips";

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_csv(trace: &RunTrace, mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.subopt),
            fmt_f64(r.consensus),
            r.messages,
            r.grad_evals,
            r.skips
        )?;
    }
    Ok(())
}

/// Serializes through a raw JSON number so the digits are kept verbatim.
/// Non-finite values become `null`.
struct Sci(f64);

impl Serialize for Sci {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(fmt_f64(self.0)).map_err(S::Error::custom)?.serialize(s)
    }
}

#[derive(Serialize)]
struct JsonRow {
    iter: usize,
    subopt: Sci,
    consensus: Sci,
    messages: u64,
    grad_evals: u64,
    skips: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_subopt: Option<Sci>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    meta: &'a lazydual::trace::TraceMeta,
    sends_per_worker: &'a [u64],
    max_delay: usize,
    max_cache_error: Sci,
    init_grad_evals: u64,
    rows: Vec<JsonRow>,
}

pub fn write_json(trace: &RunTrace, mut w: impl Write) -> Result<()> {
    let rows = trace
        .rows
        .iter()
        .map(|r| JsonRow {
            iter: r.iter,
            subopt: Sci(r.subopt),
            consensus: Sci(r.consensus),
            messages: r.messages,
            grad_evals: r.grad_evals,
            skips: r.skips,
            dual_subopt: r.dual_subopt.map(Sci),
        })
        .collect();
    let env = Envelope {
        meta: &trace.meta,
        sends_per_worker: &trace.sends_per_worker,
        max_delay: trace.max_delay,
        max_cache_error: Sci(trace.max_cache_error),
        init_grad_evals: trace.init_grad_evals,
        rows,
    };
    serde_json::to_writer_pretty(&mut w, &env)?;
    writeln!(w)?;
    Ok(())
}

fn bad_row(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config { origin: format!("trace line {line}"), msg: msg.to_string() }
}

/// Reads the rows back from CSV written by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(bad_row(1, format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad_row(i + 2, "expected 6 fields"));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad_row(i + 2, e));
            let float = |s: &str| s.parse::<f64>().map_err(|e| bad_row(i + 2, e));
            Ok(TraceRow {
                iter: int(f[0])? as usize,
                subopt: float(f[1])?,
                consensus: float(f[2])?,
                messages: int(f[3])?,
                grad_evals: int(f[4])?,
                skips: int(f[5])? as usize,
                dual_subopt: None,
            })
        })
        .collect()
}

/// Reads the rows back from a JSON envelope written by [`write_json`].
pub fn read_json_rows(text: &str) -> Result<Vec<TraceRow>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let rows = v["rows"].as_array().ok_or_else(|| bad_row(0, "missing rows"))?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let int = |k: &str| r[k].as_u64().ok_or_else(|| bad_row(i, format!("missing {k}")));
            let float = |k: &str| r[k].as_f64().unwrap_or(f64::NAN);
            Ok(TraceRow {
                iter: int("iter")? as usize,
                subopt: float("subopt"),
                consensus: float("consensus"),
                messages: int("messages")?,
                grad_evals: int("grad_evals")?,
                skips: int("skips")? as usize,
                dual_subopt: r.get("dual_subopt").and_then(|d| d.as_f64()),
            })
        })
        .collect()
}
