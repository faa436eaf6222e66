//! Flat output records and their CSV/JSON encodings.

use std::io::Write;

use crate::params::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Str(String),
    Int(u64),
    Float(f64),
    Bool(bool),
    Null,
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Str(s.to_owned())
    }
}
impl From<String> for Field {
    fn from(s: String) -> Self {
        Field::Str(s)
    }
}
impl From<u32> for Field {
    fn from(v: u32) -> Self {
        Field::Int(v.into())
    }
}
impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}
impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}
impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}
impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}
impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(v: Option<T>) -> Self {
        v.map_or(Field::Null, Into::into)
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Str(s) => s.clone(),
            Field::Int(v) => v.to_string(),
            Field::Float(x) => format_float(*x),
            Field::Bool(b) => b.to_string(),
            Field::Null => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Field::Str(s) => s.clone().into(),
            Field::Int(v) => (*v).into(),
            // Non-finite floats have no JSON form.
            Field::Float(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, Into::into),
            Field::Bool(b) => (*b).into(),
            Field::Null => serde_json::Value::Null,
        }
    }
}

/// An ordered list of named fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record(pub Vec<(String, Field)>);

impl Record {
    pub fn push(&mut self, key: &str, value: impl Into<Field>) -> &mut Self {
        self.0.push((key.to_owned(), value.into()));
        self
    }

    pub fn extend(&mut self, other: &Record) -> &mut Self {
        self.0.extend(other.0.iter().cloned());
        self
    }
}

/// Writes `records` as one table. Every record must carry the same keys in
/// the same order.
pub fn write_records(out: &mut dyn Write, records: &[Record], format: Format) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = records.first() {
                w.write_record(first.0.iter().map(|(k, _)| k.as_str()))?;
            }
            for r in records {
                debug_assert!(records[0].0.iter().map(|(k, _)| k).eq(r.0.iter().map(|(k, _)| k)));
                w.write_record(r.0.iter().map(|(_, v)| v.csv()))?;
            }
            w.flush()
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = records
                .iter()
                .map(|r| serde_json::Value::Object(r.0.iter().map(|(k, v)| (k.clone(), v.json())).collect()))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            writeln!(out)
        }
    }
}
