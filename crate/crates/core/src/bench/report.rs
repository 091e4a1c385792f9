use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{
    comm_overhead, compute_composition, concrete_beran_signals, predict_compute, BenchError,
    CommOverhead, HandshakeTiming, ModelOptions, ParamTable, Protocol, Sizing,
};
use crate::crypto::{Composition, PrimitiveTimings, SuiteKind};

pub const CSV_HEADER: [&str; 9] = [
    "protocol",
    "suite",
    "mode",
    "signal_index",
    "bits",
    "total_bits",
    "total_bytes",
    "predicted_us",
    "measured_us",
];

/// One (protocol, suite) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub protocol: Protocol,
    pub suite: SuiteKind,
    pub mode: &'static str,
    pub comm: CommOverhead,
    pub composition: Composition,
    pub predicted_us: Option<f64>,
    /// Signals 1-2 portion of the executable handshake; BE-RAN only.
    pub measured_us: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

/// Rows for every protocol under every suite, in a fixed order. Suites
/// without an entry in `timings` get no prediction.
pub fn build_report(
    params: &ParamTable,
    options: ModelOptions,
    timings: &[PrimitiveTimings],
    measured: &[HandshakeTiming],
) -> Result<Vec<OverheadRow>, BenchError> {
    let mut rows = Vec::new();
    for suite in SuiteKind::ALL {
        let suite_timings = timings.iter().find(|t| t.suite == suite);
        for protocol in Protocol::ALL {
            let comm = match (protocol, options.sizing) {
                (Protocol::BeRan, Sizing::Concrete) => concrete_beran_signals(suite)?,
                _ => comm_overhead(protocol, suite, params, options.cert_mode),
            };
            let predicted_us = suite_timings
                .map(|t| predict_compute(protocol, t))
                .transpose()?;
            let measured_us = match protocol {
                Protocol::BeRan => measured
                    .iter()
                    .find(|m| m.suite == suite)
                    .map(|m| m.signals_us),
                _ => None,
            };
            rows.push(OverheadRow {
                protocol,
                suite,
                mode: options.mode_label(protocol),
                comm,
                composition: compute_composition(protocol),
                predicted_us,
                measured_us,
            });
        }
    }
    Ok(rows)
}

fn micros(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

#[derive(Serialize)]
struct CsvLine<'a> {
    protocol: &'a str,
    suite: &'a str,
    mode: &'a str,
    signal_index: usize,
    bits: u64,
    total_bits: u64,
    total_bytes: u64,
    predicted_us: String,
    measured_us: String,
}

/// One line per signal; totals repeat on every line of a pair.
pub fn csv_report(rows: &[OverheadRow]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        for (i, bits) in row.comm.signals.iter().enumerate() {
            w.serialize(CsvLine {
                protocol: row.protocol.name(),
                suite: row.suite.token(),
                mode: row.mode,
                signal_index: i + 1,
                bits: *bits,
                total_bits: row.comm.total_bits,
                total_bytes: row.comm.total_bytes,
                predicted_us: micros(row.predicted_us),
                measured_us: micros(row.measured_us),
            })?;
        }
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn text_report(rows: &[OverheadRow]) -> String {
    let mut out = String::new();
    for row in rows {
        let signals: Vec<String> = row.comm.signals.iter().map(u64::to_string).collect();
        writeln!(out, "[{} {} {}]", row.protocol, row.suite.token(), row.mode).unwrap();
        writeln!(out, "signals = {}", signals.join(" ")).unwrap();
        writeln!(out, "total_bits = {}", row.comm.total_bits).unwrap();
        writeln!(out, "total_bytes = {}", row.comm.total_bytes).unwrap();
        writeln!(out, "composition = {}", row.composition).unwrap();
        writeln!(out, "predicted_us = {}", micros(row.predicted_us)).unwrap();
        writeln!(out, "measured_us = {}", micros(row.measured_us)).unwrap();
        out.push('\n');
    }
    out
}

pub fn write_report(
    path: &Path,
    rows: &[OverheadRow],
    format: ReportFormat,
) -> Result<(), BenchError> {
    let text = match format {
        ReportFormat::Csv => csv_report(rows)?,
        ReportFormat::Text => text_report(rows),
    };
    std::fs::write(path, text)?;
    Ok(())
}
