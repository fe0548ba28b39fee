//! Result tables with deterministic TSV/CSV rendering.

use std::fmt;
use std::io::Write;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::{CliError, Result};

/// One table cell. Non-finite reals serialize as the strings `inf`, `-inf`, `nan`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Real(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(v) if v.is_nan() => write!(f, "nan"),
            Cell::Real(v) if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) => write!(f, "{v:e}"),
            Cell::Real(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{}", s.replace(['\t', '\n'], " ")),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Real(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Real(_) => s.serialize_str(&self.to_string()),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Bool(b) => s.serialize_bool(*b),
            Cell::Empty => s.serialize_unit(),
        }
    }
}

struct CellVisitor;

impl<'de> Visitor<'de> for CellVisitor {
    type Value = Cell;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number, string, bool or null")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Cell, E> {
        Ok(Cell::Int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Cell, E> {
        i64::try_from(v).map(Cell::Int).map_err(|_| E::custom("integer out of range"))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Cell, E> {
        Ok(Cell::Real(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Cell, E> {
        Ok(match v {
            "inf" => Cell::Real(f64::INFINITY),
            "-inf" => Cell::Real(f64::NEG_INFINITY),
            "nan" => Cell::Real(f64::NAN),
            _ => Cell::Text(v.to_string()),
        })
    }

    fn visit_bool<E: de::Error>(self, v: bool) -> std::result::Result<Cell, E> {
        Ok(Cell::Bool(v))
    }

    fn visit_unit<E: de::Error>(self) -> std::result::Result<Cell, E> {
        Ok(Cell::Empty)
    }

    fn visit_none<E: de::Error>(self) -> std::result::Result<Cell, E> {
        Ok(Cell::Empty)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Cell, D::Error> {
        d.deserialize_any(CellVisitor)
    }
}

/// Named table with fixed column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn write_sep<W: Write>(&self, mut w: W, sep: &str) -> Result<()> {
        writeln!(w, "{}", self.columns.join(sep))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string().replace(sep, " ")).collect();
            writeln!(w, "{}", cells.join(sep))?;
        }
        Ok(())
    }

    pub fn write_tsv<W: Write>(&self, w: W) -> Result<()> {
        self.write_sep(w, "\t")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_sep(w, ",")
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 table")
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: &Table) -> Result<()> {
        if other.columns != self.columns {
            return Err(CliError::Aggregation(format!(
                "table {} has columns {:?}, expected {:?}",
                other.name, other.columns, self.columns
            )));
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    /// Stable sort by a numeric column (rows without a number go last).
    pub fn sort_by_numeric(&mut self, column: &str) {
        if let Some(c) = self.column(column) {
            self.rows.sort_by(|a, b| {
                let (x, y) = (a[c].as_f64().unwrap_or(f64::INFINITY), b[c].as_f64().unwrap_or(f64::INFINITY));
                x.total_cmp(&y)
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip_through_json() {
        let cells = vec![
            Cell::Int(3),
            Cell::Real(0.1),
            Cell::Real(f64::INFINITY),
            Cell::Text("x".into()),
            Cell::Bool(true),
            Cell::Empty,
        ];
        let s = serde_json::to_string(&cells).unwrap();
        let back: Vec<Cell> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cells);
    }

    #[test]
    fn tsv_has_header_and_rows() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1i64.into(), 0.5.into()]);
        assert_eq!(t.to_tsv(), "a\tb\n1\t0.5\n");
    }
}
