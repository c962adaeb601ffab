use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use minorant_core::dominator::DepthRecord;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

pub struct Sink {
    out: Box<dyn Write>,
    format: Format,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

impl Sink {
    /// Opens the output before any sampling so an unwritable path fails fast.
    pub fn open(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match &cfg.out {
            Some(p) => Box::new(create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Self { out, format: cfg.format })
    }

    pub fn write<T: Serialize>(&mut self, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut self.out);
                for r in rows {
                    w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
                }
                w.flush().map_err(|e| CliError::Output(e.to_string()))?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut self.out, rows).map_err(|e| CliError::Output(e.to_string()))?;
                writeln!(self.out).map_err(|e| CliError::Output(e.to_string()))?;
            }
        }
        self.out.flush().map_err(|e| CliError::Output(e.to_string()))
    }
}

#[derive(Serialize)]
pub struct TraceRow {
    depth: usize,
    #[serde(rename = "U")]
    u: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "R_bar")]
    r_bar: f64,
    #[serde(rename = "D_bar")]
    d_bar: f64,
    c: f64,
}

impl From<&DepthRecord> for TraceRow {
    fn from(r: &DepthRecord) -> Self {
        Self { depth: r.depth, u: r.u, s: r.s, f: r.f, r_bar: r.r_bar, d_bar: r.d_bar, c: r.c }
    }
}

/// Dominator trace as CSV `(depth, U, S, F, R_bar, D_bar, c)`.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
