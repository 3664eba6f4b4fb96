//! CSV and key-value writers. Floats use Rust's shortest round-trip
//! formatting so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use erbo_core::detector::Calibration;
use erbo_core::episode::TraceRow;
use erbo_core::responder::StepRecord;

use crate::error::{csv_err, io_err, Result};

pub const TRACE_HEADER: [&str; 12] =
    ["step", "t_sec", "x", "y", "heading", "speed", "error", "smoothed", "rate", "a1", "a2", "phase"];
pub const SUMMARY_HEADER: [&str; 5] = ["scenario", "policy", "reps", "successes", "success_rate"];
pub const RUNS_HEADER: [&str; 9] =
    ["scenario", "policy", "seed", "success", "collided", "off_road", "trigger_step", "trigger_distance", "ule"];
pub const AGGREGATE_HEADER: [&str; 10] = [
    "scenario",
    "policy",
    "k",
    "n",
    "error_p25",
    "error_median",
    "error_p75",
    "rate_p25",
    "rate_median",
    "rate_p75",
];
pub const RESPONDER_HEADER: [&str; 10] =
    ["step", "raw_error", "smoothed_error", "error_rate", "targets", "target_min", "target_mean", "beta", "a1", "a2"];

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Writes a header and rows of pre-formatted fields.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn trace_fields(r: &TraceRow) -> Vec<String> {
    vec![
        r.step.to_string(),
        num(r.t_sec),
        num(r.x),
        num(r.y),
        num(r.heading),
        num(r.speed),
        num(r.error),
        num(r.smoothed),
        opt(r.rate),
        num(r.a1),
        num(r.a2),
        r.phase.name().to_string(),
    ]
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_csv(path, &TRACE_HEADER, rows.iter().map(trace_fields))
}

pub fn write_responder_log(path: &Path, log: &[StepRecord]) -> Result<()> {
    write_csv(
        path,
        &RESPONDER_HEADER,
        log.iter().map(|s| {
            vec![
                s.step.to_string(),
                num(s.raw_error),
                num(s.smoothed_error),
                opt(s.error_rate),
                s.targets.count.to_string(),
                if s.targets.count > 0 { num(s.targets.min) } else { String::new() },
                if s.targets.count > 0 { num(s.targets.mean) } else { String::new() },
                num(s.beta),
                num(s.action[0]),
                num(s.action[1]),
            ]
        }),
    )
}

/// `key = value` report of a calibration.
pub fn calibration_report(cal: &Calibration, samples: usize) -> String {
    let mut s = String::new();
    let method = match cal.method {
        erbo_core::detector::CalibrationMethod::Empirical => "empirical",
        erbo_core::detector::CalibrationMethod::BurrFit => "burr",
    };
    let _ = writeln!(s, "method = {method}");
    let _ = writeln!(s, "rho = {}", cal.rho);
    let _ = writeln!(s, "samples = {samples}");
    let _ = writeln!(s, "threshold = {}", cal.threshold);
    if let Some(p) = cal.params {
        let _ = writeln!(s, "burr_c = {}", p.c);
        let _ = writeln!(s, "burr_d = {}", p.d);
        let _ = writeln!(s, "burr_loc = {}", p.loc);
        let _ = writeln!(s, "burr_scale = {}", p.scale);
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Reads a column of errors: one number per line, or a CSV whose
/// `error` column holds them.
pub fn read_errors(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |msg: String| crate::error::HarnessError::Config { path: path.into(), msg };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(first) = lines.next() else { return Ok(Vec::new()) };
    let cols: Vec<&str> = first.split(',').map(str::trim).collect();
    let (col, header) = match cols.iter().position(|c| *c == "error") {
        Some(i) => (i, true),
        None => (0, false),
    };
    let parse = |line: &str| -> Result<f64> {
        let field = line.split(',').nth(col).map(str::trim).unwrap_or("");
        field.parse::<f64>().map_err(|_| bad(format!("not a number: `{field}`")))
    };
    let mut out = Vec::new();
    if !header {
        out.push(parse(first)?);
    }
    for l in lines {
        out.push(parse(l)?);
    }
    Ok(out)
}
