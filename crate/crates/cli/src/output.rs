//! Writing results to stdout or a file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Opens `path`, or stdout when there is none.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| CliError::Write { path: p.to_path_buf(), source })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn target(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> CliResult<()> {
    let write_err = |source| CliError::Write { path: target(path), source };
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| write_err(e.into()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(write_err)
}

/// Writes a header and rows of already formatted fields.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let write_err = |e: csv::Error| CliError::Write { path: target(path), source: e.into() };
    let mut w = csv::Writer::from_writer(sink(path)?);
    w.write_record(header).map_err(write_err)?;
    for row in rows {
        w.write_record(row).map_err(write_err)?;
    }
    w.flush().map_err(|source| CliError::Write { path: target(path), source })
}
