//! Result CSV and session-state persistence.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! written file recovers every value bit for bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::acquisition::Mode;
use crate::benchmarks::{summarize, PercentileRow};
use crate::design::{JclSession, Method, RunRecord, Status, TraceRow};
use crate::error::{invalid, Error, Result};

/// One trace row of one run, as stored in the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub seed: u64,
    pub rep: usize,
    pub n: usize,
    pub mode: Mode,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t_n: Option<f64>,
    pub jmax: Option<f64>,
    pub d_n: f64,
    pub wall_ms: Option<f64>,
}

impl ResultRow {
    pub fn from_trace(record: &RunRecord, rep: usize, timing: bool) -> Vec<ResultRow> {
        record
            .rows
            .iter()
            .map(|r| ResultRow {
                method: record.method,
                seed: record.seed,
                rep,
                n: r.n,
                mode: r.mode,
                x: r.x.clone(),
                y: r.y.clone(),
                t_n: r.t_n,
                jmax: r.jmax,
                d_n: r.d_n,
                wall_ms: timing.then_some(r.wall_ms),
            })
            .collect()
    }
}

fn csv_err(e: csv::Error) -> Error {
    invalid(format!("CSV: {e}"))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Unknown(format!("I/O: {e}"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn result_header(d: usize, r: usize) -> Vec<String> {
    let mut h: Vec<String> = ["method", "seed", "rep", "n", "mode"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|i| format!("x{i}")));
    h.extend((1..=r).map(|i| format!("y{i}")));
    h.extend(["t_n", "jmax", "d_n", "wall_ms"].iter().map(|s| s.to_string()));
    h
}

/// Incremental CSV writer, so partial output survives a failing run.
pub struct ResultWriter<W: Write> {
    inner: csv::Writer<W>,
    d: usize,
    r: usize,
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W, d: usize, r: usize) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        inner.write_record(result_header(d, r)).map_err(csv_err)?;
        Ok(Self { inner, d, r })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        if row.x.len() != self.d || row.y.len() != self.r {
            return Err(invalid(format!("row has {} inputs and {} outputs, header expects {} and {}", row.x.len(), row.y.len(), self.d, self.r)));
        }
        let mut rec = vec![row.method.to_string(), row.seed.to_string(), row.rep.to_string(), row.n.to_string(), row.mode.to_string()];
        rec.extend(row.x.iter().chain(&row.y).map(|v| v.to_string()));
        rec.extend([opt(row.t_n), opt(row.jmax), row.d_n.to_string(), opt(row.wall_ms)]);
        self.inner.write_record(rec).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(io_err)
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| io_err(e.into_error()))
    }
}

pub fn write_results<W: Write>(out: W, d: usize, r: usize, rows: &[ResultRow]) -> Result<W> {
    let mut w = ResultWriter::new(out, d, r)?;
    for row in rows {
        w.write(row)?;
    }
    w.into_inner()
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| invalid(format!("bad {what} value '{field}'")))
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field.parse::<T>().map_err(|_| invalid(format!("bad {what} value '{field}'")))
}

/// Parses a results CSV, returning `(d, R, rows)`.
pub fn read_results<R: Read>(input: R) -> Result<(usize, usize, Vec<ResultRow>)> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let count = |p: char| header.iter().filter(|h| h.starts_with(p) && h[1..].parse::<usize>().is_ok()).count();
    let (d, r) = (count('x'), count('y'));
    if header != result_header(d, r) {
        return Err(invalid(format!("unexpected header: {}", header.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 9 + d + r {
            return Err(invalid(format!("row with {} fields, expected {}", rec.len(), 9 + d + r)));
        }
        let f = |i: usize| &rec[i];
        let x = (0..d).map(|j| parse_f64(f(5 + j), "x")).collect::<Result<Vec<_>>>()?;
        let y = (0..r).map(|j| parse_f64(f(5 + d + j), "y")).collect::<Result<Vec<_>>>()?;
        let k = 5 + d + r;
        rows.push(ResultRow {
            method: f(0).parse()?,
            seed: parse_int(f(1), "seed")?,
            rep: parse_int(f(2), "rep")?,
            n: parse_int(f(3), "n")?,
            mode: f(4).parse()?,
            x,
            y,
            t_n: parse_opt(f(k), "t_n")?,
            jmax: parse_opt(f(k + 1), "jmax")?,
            d_n: parse_f64(f(k + 2), "d_n")?,
            wall_ms: parse_opt(f(k + 3), "wall_ms")?,
        });
    }
    Ok((d, r, rows))
}

/// Regroups CSV rows into per-run traces keyed by `(method, seed, rep)`.
pub fn rows_to_records(rows: &[ResultRow]) -> Vec<RunRecord> {
    let mut runs: BTreeMap<(String, u64, usize), RunRecord> = BTreeMap::new();
    for row in rows {
        let rec = runs.entry((row.method.to_string(), row.seed, row.rep)).or_insert_with(|| RunRecord {
            method: row.method,
            seed: row.seed,
            rows: Vec::new(),
            status: Status::BudgetExhausted,
            failure: None,
        });
        rec.rows.push(TraceRow {
            n: row.n,
            mode: row.mode,
            x: row.x.clone(),
            y: row.y.clone(),
            t_n: row.t_n,
            jmax: row.jmax,
            d_n: row.d_n,
            wall_ms: row.wall_ms.unwrap_or(0.0),
        });
    }
    let mut out: Vec<RunRecord> = runs.into_values().collect();
    for r in &mut out {
        r.rows.sort_by_key(|t| t.n);
    }
    out
}

/// Percentile summary of a results CSV, in first-appearance method order.
pub fn summarize_rows(rows: &[ResultRow]) -> Vec<PercentileRow> {
    let mut methods: Vec<Method> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let n_max = rows.iter().map(|r| r.n).max().unwrap_or(0);
    summarize(&rows_to_records(rows), &methods, n_max)
}

pub fn write_summary<W: Write>(out: W, rows: &[PercentileRow]) -> Result<W> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["method", "n", "p10", "p50", "p90"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.method.to_string(), r.n.to_string(), r.p10.to_string(), r.p50.to_string(), r.p90.to_string()])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| io_err(e.into_error()))
}

pub const STATE_VERSION: &str = "1";

/// Version-tagged on-disk form of an ask-tell session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: String,
    pub session: JclSession,
}

impl SessionState {
    pub fn new(session: JclSession) -> Self {
        Self { version: STATE_VERSION.into(), session }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Unknown(format!("JSON: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid(format!("malformed state JSON: {e}")))?;
        match v.get("version").and_then(|v| v.as_str()) {
            Some(STATE_VERSION) => {}
            Some(other) => return Err(invalid(format!("state version '{other}' is not supported (expected '{STATE_VERSION}')"))),
            None => return Err(invalid("state file has no version field")),
        }
        serde_json::from_value(v).map_err(|e| invalid(format!("malformed state: {e}")))
    }
}
