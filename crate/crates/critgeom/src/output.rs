//! Record emission as JSON lines, CSV, or aligned text tables.
//!
//! Every record starts with `command`, `record`, `spec_hash`, `seed` and
//! `version`. CSV and table output start a new header whenever the column set
//! changes, so a summary footer gets its own header line.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub spec_hash: Option<String>,
    pub seed: Option<u64>,
}

pub struct Emitter<'a> {
    out: &'a mut dyn Write,
    format: Format,
    header: Header,
    keys: Option<Vec<String>>,
    pending: Vec<Vec<String>>,
    groups: usize,
}

/// Linear value when it is a finite nonzero f64, else null.
pub fn linear(ln: f64) -> Value {
    let v = ln.exp();
    if v.is_finite() && v > 0.0 {
        Value::from(v)
    } else {
        Value::Null
    }
}

pub fn log10_of_ln(ln: f64) -> f64 {
    ln / std::f64::consts::LN_10
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl<'a> Emitter<'a> {
    pub fn new(out: &'a mut dyn Write, format: Format, header: Header) -> Self {
        Self {
            out,
            format,
            header,
            keys: None,
            pending: Vec::new(),
            groups: 0,
        }
    }

    pub fn emit(&mut self, record: &str, fields: Map<String, Value>) -> io::Result<()> {
        let mut m = Map::new();
        m.insert("command".into(), self.header.command.into());
        m.insert("record".into(), record.into());
        m.insert("spec_hash".into(), self.header.spec_hash.clone().into());
        m.insert("seed".into(), self.header.seed.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.extend(fields);
        match self.format {
            Format::Json => {
                serde_json::to_writer(&mut *self.out, &m)?;
                writeln!(self.out)
            }
            Format::Csv | Format::Table => {
                let keys: Vec<String> = m.keys().cloned().collect();
                if self.keys.as_ref() != Some(&keys) {
                    self.flush_group()?;
                    if self.format == Format::Csv {
                        self.write_csv(&keys)?;
                    } else {
                        self.pending.push(keys.clone());
                    }
                    self.keys = Some(keys);
                }
                let row: Vec<String> = m.values().map(cell).collect();
                if self.format == Format::Csv {
                    self.write_csv(&row)
                } else {
                    self.pending.push(row);
                    Ok(())
                }
            }
        }
    }

    fn write_csv(&mut self, row: &[String]) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(row).map_err(io::Error::other)?;
        let bytes = w
            .into_inner()
            .map_err(|e| io::Error::other(e.to_string()))?;
        self.out.write_all(&bytes)
    }

    fn flush_group(&mut self) -> io::Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let cols = self.pending[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| {
                self.pending
                    .iter()
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        if self.groups > 0 {
            writeln!(self.out)?;
        }
        self.groups += 1;
        for row in std::mem::take(&mut self.pending) {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            writeln!(self.out, "{}", line.join("  ").trim_end())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.flush_group()?;
        self.out.flush()
    }
}
