//! Headered delimiter-separated output tables.

use std::fs;
use std::io;
use std::path::Path;

use crate::matrix::is_missing;

/// Cell text used for missing numeric values in emitted tables.
pub const NA: &str = "NA";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // Writing into a Vec<u8> cannot fail.
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_csv_string())
    }
}

/// Formats a float for tables; `NaN` becomes [`NA`]. Uses the shortest round-trip form.
pub fn fmt_f64(v: f64) -> String {
    if is_missing(v) {
        NA.to_string()
    } else {
        format!("{v}")
    }
}

/// Formats an optional metric, with `undefined` for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), fmt_f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_cells_with_delimiters() {
        let mut t = Table::new(["a", "b"]);
        t.push(["x,y", "NA"]);
        assert_eq!(t.to_csv_string(), "a,b\n\"x,y\",NA\n");
    }

    #[test]
    fn missing_formats_as_na() {
        assert_eq!(fmt_f64(f64::NAN), "NA");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_opt(None), "undefined");
    }
}
