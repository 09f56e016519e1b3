//! Per-occupation computerization probabilities.

use std::collections::BTreeMap;
use std::path::Path;

use super::{DatasetError, Result};

/// Map from occupation code to computerization probability in `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskTable {
    values: BTreeMap<String, f64>,
}

impl RiskTable {
    pub fn new() -> Self {
        RiskTable::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut table = RiskTable::new();
        for (code, value) in pairs {
            table.insert(code.into(), value)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, code: String, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(DatasetError::RiskOutOfRange { code, value });
        }
        if self.values.insert(code.clone(), value).is_some() {
            return Err(DatasetError::DuplicateKey { key: code });
        }
        Ok(())
    }

    pub fn get(&self, code: &str) -> Option<f64> {
        self.values.get(code).copied()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.values.contains_key(code)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Codes and probabilities in lexicographic code order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Loads a `code,probability` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())
            .map_err(super::csv_error)?;
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(super::csv_error)?,
            None => return Err(DatasetError::EmptyTable),
        };
        let fields: Vec<&str> = header.iter().map(str::trim).collect();
        if fields != ["code", "probability"] {
            return Err(DatasetError::malformed(1, "risk header must be 'code,probability'"));
        }
        let mut table = RiskTable::new();
        for rec in records {
            let rec = rec.map_err(super::csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 2 {
                return Err(DatasetError::malformed(line, "expected 2 fields"));
            }
            let code = rec[0].trim().to_string();
            super::check_code(&code)?;
            let value: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| DatasetError::malformed(line, format!("'{}' is not a probability", &rec[1])))?;
            table.insert(code, value)?;
        }
        Ok(table)
    }

    /// Writes the canonical `code,probability` file, codes sorted.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref()).map_err(super::csv_error)?;
        writer
            .write_record(["code", "probability"])
            .map_err(super::csv_error)?;
        for (code, value) in &self.values {
            writer
                .write_record([code.as_str(), &value.to_string()])
                .map_err(super::csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    #[test]
    fn rejects_out_of_range() {
        let mut t = RiskTable::new();
        assert!(matches!(
            t.insert("a".into(), 1.2).unwrap_err(),
            DatasetError::RiskOutOfRange { .. }
        ));
        assert!(matches!(
            t.insert("a".into(), -0.1).unwrap_err(),
            DatasetError::RiskOutOfRange { .. }
        ));
        t.insert("a".into(), 0.0).unwrap();
        t.insert("b".into(), 1.0).unwrap();
    }

    #[test]
    fn load_and_round_trip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"code,probability\nb,0.73\na,0.2\n").unwrap();
        let t = RiskTable::load(f.path()).unwrap();
        assert_eq!(t.get("b"), Some(0.73));
        let out = tempfile::NamedTempFile::new().unwrap();
        t.write(out.path()).unwrap();
        let back = RiskTable::load(out.path()).unwrap();
        assert_eq!(back, t);
        // canonical serialization is a byte-level fixed point
        let out2 = tempfile::NamedTempFile::new().unwrap();
        back.write(out2.path()).unwrap();
        assert_eq!(
            std::fs::read(out.path()).unwrap(),
            std::fs::read(out2.path()).unwrap()
        );
    }

    #[test]
    fn duplicate_code_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"code,probability\na,0.5\na,0.6\n").unwrap();
        assert!(matches!(
            RiskTable::load(f.path()).unwrap_err(),
            DatasetError::DuplicateKey { .. }
        ));
    }
}
