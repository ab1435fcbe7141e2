//! Records and their CSV and JSON encodings.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so both encodings carry identical values. Non-finite numbers are
//! written as the strings `NaN`, `inf` and `-inf` in both.

use std::io::Write;

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::CliError;

pub const SCHEMA: &str = "adx-lab.v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    fn cell(&self) -> String {
        match self {
            Value::Num(v) => v.to_string(),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        // seeds above i64::MAX keep their bits as text
        i64::try_from(v).map_or_else(|_| Value::Text(v.to_string()), Value::Int)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Value::Num(v) => s.serialize_str(&v.to_string()),
            Value::Int(v) => s.serialize_i64(*v),
            Value::Bool(v) => s.serialize_bool(*v),
            Value::Text(t) => s.serialize_str(t),
        }
    }
}

/// Ordered field list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(String, Value)>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }
}

impl Serialize for Record {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// Output of one command: run metadata and one record per sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: Record,
    pub records: Vec<Record>,
    /// Diagnostics for the error stream.
    pub warnings: Vec<String>,
    /// Some point failed to converge.
    pub not_converged: bool,
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("schema", SCHEMA)?;
        map.serialize_entry("meta", &self.meta)?;
        map.serialize_entry("records", &self.records)?;
        map.end()
    }
}

impl Report {
    /// CSV with one row per record; metadata fields are appended to every row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        if let Some(first) = self.records.first() {
            w.write_record(first.keys().chain(self.meta.keys()))?;
        }
        for r in &self.records {
            w.write_record(r.0.iter().chain(&self.meta.0).map(|(_, v)| v.cell()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}
