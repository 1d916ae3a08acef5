//! Plot-ready columnar text: a header row followed by tab-separated rows.

use std::fmt::Display;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl ColumnTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push<D: Display>(&mut self, row: impl IntoIterator<Item = D>) {
        let row: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Formats a float with enough digits to round-trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}
