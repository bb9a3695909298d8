//! Schema-versioned CSV documents.
//!
//! Format: UTF-8, LF line endings, `.` decimal separator, `#`-prefixed
//! metadata lines (schema id, resolved configuration, plot hint), one
//! header row, comma-separated value rows. Floats are rendered with the
//! shortest round-trip representation, so a fixed configuration and seed
//! produce byte-identical files.

use std::path::Path;

use crate::error::{Error, Result};

/// CSV schema identifier written as the first metadata line.
pub const CSV_SCHEMA: &str = "pairsep.csv/1";

/// Renders a float for CSV/plot output: shortest round-trip form with
/// `inf`/`nan` sentinels.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

fn parse_float(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        "nan" => f64::NAN,
        other => other.parse().unwrap_or(f64::NAN),
    }
}

/// An in-memory CSV document with metadata.
#[derive(Debug, Clone)]
pub struct CsvDocument {
    metadata: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: vec![("schema".to_string(), CSV_SCHEMA.to_string())],
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a metadata entry; multi-line values become one `# key:` line
    /// per value line.
    pub fn add_metadata(&mut self, key: &str, value: &str) {
        for line in value.lines() {
            self.metadata.push((key.to_string(), line.to_string()));
        }
    }

    pub fn metadata(&self, key: &str) -> Vec<&str> {
        self.metadata
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Numeric view of one column.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::Config(format!("CSV has no column '{name}'")))?;
        Ok(self.rows.iter().map(|r| parse_float(&r[idx])).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str("# ");
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    /// Parses a document produced by [`render`](Self::render).
    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim_start();
                if let Some((k, v)) = rest.split_once(':') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|s| s.to_string()).collect();
            if header.is_none() {
                header = Some(cells);
            } else {
                rows.push(cells);
            }
        }
        let header = header.ok_or_else(|| Error::Config("CSV document has no header".into()))?;
        let schema_ok = metadata
            .iter()
            .any(|(k, v)| k == "schema" && v == CSV_SCHEMA);
        if !schema_ok {
            return Err(Error::Config(format!(
                "CSV document does not declare schema '{CSV_SCHEMA}'"
            )));
        }
        Ok(Self {
            metadata,
            header,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse_round_trip() {
        let mut doc = CsvDocument::new(&["a", "b"]);
        doc.add_metadata("config", "line1\nline2");
        doc.push_row(vec![format_float(0.5), format_float(f64::INFINITY)]);
        doc.push_row(vec![format_float(1e-12), "7".to_string()]);
        let text = doc.render();
        assert!(text.starts_with("# schema: pairsep.csv/1\n"));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        let parsed = CsvDocument::parse(&text).unwrap();
        assert_eq!(parsed.header(), doc.header());
        assert_eq!(parsed.rows().len(), 2);
        assert_eq!(parsed.metadata("config"), vec!["line1", "line2"]);
        let col = parsed.column_f64("b").unwrap();
        assert!(col[0].is_infinite());
        assert_eq!(col[1], 7.0);
        // byte stability under re-render
        assert_eq!(parsed.render(), text);
    }

    #[test]
    fn float_formatting_is_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 39.478_417_604_357_434, 1e-300] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn parse_rejects_missing_schema() {
        assert!(CsvDocument::parse("a,b\n1,2\n").is_err());
    }
}
