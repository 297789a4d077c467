//! Tables rendered as CSV or JSON. Numbers are always written in scientific
//! notation with 17 significant digits so output is byte-reproducible.

use std::fmt::Write as _;

use clap::ValueEnum;
use qcalc::Flags;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Str(String),
    Flags(Flags),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}

impl From<Flags> for Cell {
    fn from(f: Flags) -> Self {
        Cell::Flags(f)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

pub fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Flags(f) => f.label(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => number(*v),
            Cell::Num(_) | Cell::Null => "null".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Str(s) => json_string(s),
            Cell::Flags(f) => {
                let names: Vec<String> = f
                    .iter_names()
                    .map(|(n, _)| json_string(&n.to_ascii_lowercase()))
                    .collect();
                format!("[{}]", names.join(","))
            }
        }
    }
}

/// A command's result: resolved configuration plus rows under a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Vec<(&'static str, Cell)>,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static [&'static str], meta: Vec<(&'static str, Cell)>) -> Self {
        Self {
            meta,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self) -> String {
        let object = |pairs: &mut dyn Iterator<Item = (&str, &Cell)>| {
            let body: Vec<String> = pairs
                .map(|(k, v)| format!("{}:{}", json_string(k), v.json()))
                .collect();
            format!("{{{}}}", body.join(","))
        };
        let mut out = String::new();
        let meta = object(&mut self.meta.iter().map(|(k, v)| (*k, v)));
        write!(out, "{{\"meta\":{meta},\"rows\":[").unwrap();
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&object(&mut self.header.iter().copied().zip(row.iter())));
        }
        out.push_str("]}\n");
        out
    }
}
