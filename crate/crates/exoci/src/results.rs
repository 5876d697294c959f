//! CSV result tables.
//!
//! Reals are written in the shortest form that parses back to the same
//! `f64`, so tables reload without loss.

use std::io::Write;

use exoci_core::SimEstimate;

use crate::error::{CliError, Result};

/// Column names of simulation tables.
pub const SIM_HEADER: [&str; 7] = ["gamma", "delta", "estimate", "std_error", "M", "seed", "kind"];

pub fn sim_row(gamma: f64, delta: f64, e: &SimEstimate) -> Vec<String> {
    vec![
        gamma.to_string(),
        delta.to_string(),
        e.value.to_string(),
        e.std_error.to_string(),
        e.m.to_string(),
        e.seed.to_string(),
        e.kind.as_str().to_string(),
    ]
}

/// A header and rows, written in one go.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("fields are UTF-8")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |e: csv::Error| CliError::Csv {
            path: "<table>".into(),
            msg: e.to_string(),
        };
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(err)?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(err)?;
        Ok(Self { header, rows })
    }
}
