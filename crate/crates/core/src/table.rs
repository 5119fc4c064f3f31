//! Signal tables as CSV: `t_1, …, t_n, <label column>, <value column>`.
//!
//! Floats are written in scientific notation with 17 significant digits so that every
//! value survives a write/read cycle bit for bit.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub times: Vec<f64>,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalCsv {
    n_times: usize,
    label_column: String,
    value_column: String,
    rows: Vec<SignalRow>,
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl SignalCsv {
    pub fn new(n_times: usize, label_column: impl Into<String>, value_column: impl Into<String>) -> Self {
        Self {
            n_times,
            label_column: label_column.into(),
            value_column: value_column.into(),
            rows: Vec::new(),
        }
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn value_column(&self) -> &str {
        &self.value_column
    }

    pub fn rows(&self) -> &[SignalRow] {
        &self.rows
    }

    pub fn push(&mut self, times: &[f64], label: impl Into<String>, value: f64) -> Result<()> {
        if times.len() != self.n_times {
            return Err(Error::Shape(format!(
                "row has {} times, table has {}",
                times.len(),
                self.n_times
            )));
        }
        self.rows.push(SignalRow {
            times: times.to_vec(),
            label: label.into(),
            value,
        });
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.n_times).map(|k| format!("t_{k}")).collect();
        h.push(self.label_column.clone());
        h.push(self.value_column.clone());
        h
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut record: Vec<String> = row.times.iter().map(|t| format_float(*t)).collect();
            record.push(row.label.clone());
            record.push(format_float(row.value));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a table written by [`SignalCsv::write`]. The header must be `t_1 … t_n`
    /// followed by exactly two named columns.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse("a signal table needs a label and a value column".into()));
        }
        let n_times = header.len() - 2;
        for (k, name) in header.iter().take(n_times).enumerate() {
            if name != format!("t_{}", k + 1) {
                return Err(Error::Parse(format!(
                    "expected column `t_{}`, found `{name}`",
                    k + 1
                )));
            }
        }
        let label_column = header[n_times].to_string();
        let value_column = header[n_times + 1].to_string();
        if label_column.is_empty() || value_column.is_empty() {
            return Err(Error::Parse("column names must not be empty".into()));
        }
        let mut table = Self::new(n_times, label_column, value_column);
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != n_times + 2 {
                return Err(Error::Parse(format!("row {} has {} fields", line + 1, record.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 1)))
            };
            let times = record
                .iter()
                .take(n_times)
                .map(parse)
                .collect::<Result<Vec<_>>>()?;
            let value = parse(&record[n_times + 1])?;
            table.push(&times, &record[n_times], value)?;
        }
        Ok(table)
    }
}
