// SPDX-License-Identifier: Apache-2.0

//! CSV/JSON report files. Floats carry 9 significant digits.

use std::io::Write;
use std::path::Path;

use hullwalk::experiments::suite::{ReportRow, Status};

use crate::CliError;

pub const HEADER: [&str; 9] =
    ["experiment", "theorem", "functional", "n", "estimate", "stderr", "target", "z", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `x` with 9 significant digits, in a form `f64::from_str` reads back.
pub fn sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        // "inf", "-inf", "NaN"
        format!("{x}")
    }
}

/// The value a row field holds after a trip through the file.
pub fn round9(x: f64) -> f64 {
    sig9(x).parse().expect("formatted float parses")
}

fn opt(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

pub fn to_csv(rows: &[ReportRow], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.theorem.clone(),
            r.functional.clone(),
            r.n.to_string(),
            sig9(r.estimate),
            sig9(r.stderr),
            opt(r.target),
            opt(r.z),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header != HEADER {
        return Err(format!("unexpected header {header:?}"));
    }
    let float = |s: &str, field: &str| s.parse::<f64>().map_err(|e| format!("{field}: {e}"));
    let optional = |s: &str, field: &str| {
        if s.is_empty() {
            Ok(None)
        } else {
            float(s, field).map(Some)
        }
    };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(ReportRow {
            experiment: rec[0].to_string(),
            theorem: rec[1].to_string(),
            functional: rec[2].to_string(),
            n: rec[3].parse().map_err(|e| format!("n: {e}"))?,
            estimate: float(&rec[4], "estimate")?,
            stderr: float(&rec[5], "stderr")?,
            target: optional(&rec[6], "target")?,
            z: optional(&rec[7], "z")?,
            status: rec[8].parse()?,
        });
    }
    Ok(rows)
}

fn render(rows: &[ReportRow], format: Format) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => to_csv(rows, &mut buf).map_err(|e| CliError::Io(e.to_string()))?,
        Format::Json => {
            let rounded: Vec<ReportRow> = rows
                .iter()
                .map(|r| ReportRow {
                    estimate: round9(r.estimate),
                    stderr: round9(r.stderr),
                    target: r.target.map(round9),
                    z: r.z.map(round9),
                    ..r.clone()
                })
                .collect();
            serde_json::to_writer_pretty(&mut buf, &rounded).map_err(|e| CliError::Io(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn write_report(rows: &[ReportRow], path: Option<&Path>, format: Format) -> Result<(), CliError> {
    let buf = render(rows, format)?;
    match path {
        Some(p) => std::fs::write(p, buf).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(&buf).map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn any_failed(rows: &[ReportRow]) -> bool {
    rows.iter().any(|r| r.status == Status::Fail)
}
