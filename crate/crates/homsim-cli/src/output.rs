//! File formats: the scan CSV schema, JSON summaries, and gnuplot-style
//! plot data. All numeric output is deterministic: floats print with 17
//! significant digits in the CSV and shortest-round-trip form in JSON,
//! lines end with LF.

use std::fmt::Write as _;

use homsim_core::{MultimodeMap, ScanResult};
use serde::Serialize;

pub const CSV_HEADER: &str = "axis,raw,expected,normalized,stderr";

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a scan in the canonical CSV schema.
pub fn scan_to_csv(scan: &ScanResult) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..scan.len() {
        let raw = scan.raw_counts.get(i).copied().unwrap_or(0);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sig17(scan.axis[i]),
            raw,
            sig17(scan.expected[i]),
            sig17(scan.normalized[i]),
            sig17(scan.stderr[i]),
        );
    }
    out
}

/// Parse the canonical CSV schema back into a scan record. Fields that the
/// file does not carry (accidentals, baseline) are zeroed or recomputed by
/// the caller.
pub fn scan_from_csv(text: &str) -> Result<ScanResult, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    if header.trim() != CSV_HEADER {
        return Err(format!("bad CSV header: expected '{CSV_HEADER}', found '{header}'"));
    }
    let mut axis = Vec::new();
    let mut raw = Vec::new();
    let mut expected = Vec::new();
    let mut normalized = Vec::new();
    let mut stderr = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(format!("row {}: expected 5 fields, found {}", n + 2, fields.len()));
        }
        let parse = |s: &str, what: &str| -> Result<f64, String> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("row {}: bad {what} value '{s}'", n + 2))
        };
        axis.push(parse(fields[0], "axis")?);
        raw.push(
            fields[1]
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("row {}: bad raw count '{}'", n + 2, fields[1]))?,
        );
        expected.push(parse(fields[2], "expected")?);
        normalized.push(parse(fields[3], "normalized")?);
        stderr.push(parse(fields[4], "stderr")?);
    }
    if axis.is_empty() {
        return Err("no data rows".into());
    }
    Ok(ScanResult {
        axis,
        raw_counts: raw,
        expected,
        normalized,
        stderr,
        accidental_per_point: 0.0,
        baseline_counts: 0.0,
    })
}

/// Two/three-column plot data for gnuplot.
pub fn scan_to_plot(scan: &ScanResult) -> String {
    let mut out = String::from("# axis normalized stderr\n");
    for i in 0..scan.len() {
        let _ = writeln!(
            out,
            "{} {} {}",
            sig17(scan.axis[i]),
            sig17(scan.normalized[i]),
            sig17(scan.stderr[i])
        );
    }
    out
}

pub fn map_to_csv(map: &MultimodeMap) -> String {
    let mut out = String::from("ix,iy,c\n");
    for (k, c) in map.entries() {
        let _ = writeln!(out, "{},{},{}", k.ix, k.iy, sig17(*c));
    }
    out
}

pub fn map_to_plot(map: &MultimodeMap) -> String {
    let mut out = String::from("# ix iy c\n");
    for (k, c) in map.entries() {
        let _ = writeln!(out, "{} {} {}", k.ix, k.iy, sig17(*c));
    }
    out
}

/// The flat, versioned JSON summary emitted by fit-style commands.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub command: String,
    pub params: serde_json::Value,
    pub results: SummaryResults,
    pub seed: u64,
}

#[derive(Debug, Default, Serialize)]
pub struct SummaryResults {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub visibility: Option<f64>,
    pub phi_retrieved: Option<f64>,
    pub sigma: Option<f64>,
}

impl Summary {
    pub fn new(command: &str, params: serde_json::Value, seed: u64) -> Self {
        Self {
            schema: 1,
            command: command.to_string(),
            params,
            results: SummaryResults::default(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Scan payload for `--format json`.
#[derive(Debug, Serialize)]
pub struct ScanPayload<'a> {
    pub schema: u32,
    pub command: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub axis: &'a [f64],
    pub raw: &'a [u64],
    pub expected: &'a [f64],
    pub normalized: &'a [f64],
    pub stderr: &'a [f64],
}

impl<'a> ScanPayload<'a> {
    pub fn new(command: &str, params: serde_json::Value, seed: u64, scan: &'a ScanResult) -> Self {
        Self {
            schema: 1,
            command: command.to_string(),
            params,
            seed,
            axis: &scan.axis,
            raw: &scan.raw_counts,
            expected: &scan.expected,
            normalized: &scan.normalized,
            stderr: &scan.stderr,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("payload serializes");
        s.push('\n');
        s
    }
}
