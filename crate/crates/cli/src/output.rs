//! Output writers: CSV with 17-significant-digit floats (round-trip exact),
//! pretty JSON, and the provenance sidecar embedded in every run.

use crate::error::CliError;
use crate::Globals;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Format a float with 17 significant digits, round-trip exact for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match f {
                CsvField::Int(v) => {
                    let _ = write!(self.buf, "{v}");
                }
                CsvField::Float(v) => {
                    let _ = write!(self.buf, "{}", fmt_f64(*v));
                }
            }
        }
        self.buf.push('\n');
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.buf)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

pub enum CsvField {
    Int(i64),
    Float(f64),
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Provenance sidecar: command name, resolved config, seed and workers.
#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    workers: usize,
    config: &'a T,
}

pub fn write_sidecar<T: Serialize>(
    globals: &Globals,
    command: &str,
    resolved: &T,
) -> Result<PathBuf, CliError> {
    let path = globals.out.join(format!("{command}_config.json"));
    write_json(
        &path,
        &Sidecar {
            command,
            seed: globals.seed,
            workers: globals.workers,
            config: resolved,
        },
    )?;
    Ok(path)
}
