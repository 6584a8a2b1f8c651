//! Result rows and their CSV/JSON encodings.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{ensure, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 11] = [
    "scenario",
    "seed",
    "trial",
    "arch",
    "sweep_name",
    "sweep_value",
    "rate_bps_hz",
    "ee_bits_hz_j",
    "gap_bits",
    "wall_ms",
    "schema_version",
];

/// One row per (trial, architecture, sweep point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub scenario: String,
    pub seed: u64,
    pub trial: usize,
    pub arch: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub rate_bps_hz: f64,
    pub ee_bits_hz_j: Option<f64>,
    pub gap_bits: Option<f64>,
    pub wall_ms: Option<f64>,
    pub schema_version: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub fn write_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[MetricRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_records<W: Write>(records: &[MetricRecord], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_json(records, out),
    }
}

/// Write to `path`, or stdout when `path` is `None`.
pub fn emit(records: &[MetricRecord], path: Option<&Path>, format: Format) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut out = BufWriter::new(file);
            write_records(records, format, &mut out).with_context(|| format!("writing {}", p.display()))?;
            out.flush().with_context(|| format!("writing {}", p.display()))
        }
        None => write_records(records, format, std::io::stdout().lock()),
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    ensure!(header == COLUMNS, "unexpected CSV header {header:?}");
    let records = r.deserialize().collect::<std::result::Result<Vec<MetricRecord>, _>>()?;
    for rec in &records {
        ensure!(
            rec.schema_version == SCHEMA_VERSION,
            "schema version {} differs from {SCHEMA_VERSION}",
            rec.schema_version
        );
    }
    Ok(records)
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<MetricRecord>> {
    Ok(serde_json::from_reader(input)?)
}

pub fn read_records(path: &Path, format: Format) -> Result<Vec<MetricRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    match format {
        Format::Csv => read_csv(file),
        Format::Json => read_json(file),
    }
    .with_context(|| format!("reading {}", path.display()))
}
