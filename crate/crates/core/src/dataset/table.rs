//! City-by-category count tables (employment and industry).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use super::{DatasetError, Result};

/// Identifier of an occupation within one taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupationId {
    pub code: String,
    /// Display string; equals `code` when the source file carries no labels.
    pub label: String,
}

impl OccupationId {
    pub fn new(code: impl Into<String>) -> Self {
        let code = code.into();
        OccupationId {
            label: code.clone(),
            code,
        }
    }

    pub fn with_label(code: impl Into<String>, label: impl Into<String>) -> Self {
        OccupationId {
            code: code.into(),
            label: label.into(),
        }
    }
}

impl fmt::Display for OccupationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// On-disk layout of a count table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSchema {
    /// `city,<code_1>,<code_2>,...` with one row per city.
    Wide,
    /// `city,code,count` with one row per positive cell.
    Long,
}

/// Dense row-major count matrix with indexed row and column ids.
#[derive(Debug, Clone, PartialEq)]
struct CountTable {
    rows: Vec<String>,
    cols: Vec<String>,
    counts: Vec<u64>,
    row_index: HashMap<String, usize>,
    col_index: HashMap<String, usize>,
}

/// Category codes travel through whitespace- and comma-delimited exports,
/// so embedded separators are rejected at load.
pub(crate) fn check_code(code: &str) -> Result<()> {
    if code.is_empty() {
        return Err(DatasetError::malformed(0, "empty category code"));
    }
    if code.chars().any(|c| c.is_whitespace() || c == ',' || c == '"') {
        return Err(DatasetError::malformed(
            0,
            format!("category code '{code}' contains a separator character"),
        ));
    }
    Ok(())
}

fn check_city_id(city: &str) -> Result<()> {
    if city.is_empty() {
        return Err(DatasetError::malformed(0, "empty city id"));
    }
    if city.contains('\n') || city.contains('"') {
        return Err(DatasetError::malformed(
            0,
            format!("city id '{city}' contains a forbidden character"),
        ));
    }
    Ok(())
}

impl CountTable {
    fn new(rows: Vec<String>, cols: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        assert_eq!(counts.len(), rows.len() * cols.len(), "count matrix shape");
        let mut row_index = HashMap::with_capacity(rows.len());
        for (i, id) in rows.iter().enumerate() {
            check_city_id(id)?;
            if row_index.insert(id.clone(), i).is_some() {
                return Err(DatasetError::DuplicateKey { key: id.clone() });
            }
        }
        let mut col_index = HashMap::with_capacity(cols.len());
        for (j, id) in cols.iter().enumerate() {
            check_code(id)?;
            if col_index.insert(id.clone(), j).is_some() {
                return Err(DatasetError::DuplicateKey { key: id.clone() });
            }
        }
        let table = CountTable {
            rows,
            cols,
            counts,
            row_index,
            col_index,
        };
        for (i, id) in table.rows.iter().enumerate() {
            if table.row(i).iter().all(|&c| c == 0) {
                return Err(DatasetError::EmptyCity { city: id.clone() });
            }
        }
        Ok(table)
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.counts[i * self.cols.len()..(i + 1) * self.cols.len()]
    }

    fn load(path: &Path, schema: TableSchema) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)
            .map_err(super::csv_error)?;
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(super::csv_error)?,
            None => return Err(DatasetError::EmptyTable),
        };
        match schema {
            TableSchema::Wide => Self::from_wide(&header, records),
            TableSchema::Long => Self::from_long(&header, records),
        }
    }

    fn from_wide<I>(header: &csv::StringRecord, records: I) -> Result<Self>
    where
        I: Iterator<Item = std::result::Result<csv::StringRecord, csv::Error>>,
    {
        if header.get(0).map(str::trim) != Some("city") {
            return Err(DatasetError::malformed(1, "wide header must start with 'city'"));
        }
        let cols: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        if cols.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        let mut rows = Vec::new();
        let mut counts = Vec::new();
        for rec in records {
            let rec = rec.map_err(super::csv_error)?;
            let line = record_line(&rec);
            if rec.len() != cols.len() + 1 {
                return Err(DatasetError::malformed(
                    line,
                    format!("expected {} fields, found {}", cols.len() + 1, rec.len()),
                ));
            }
            let city = rec[0].trim().to_string();
            for (j, field) in rec.iter().skip(1).enumerate() {
                counts.push(parse_count(field, line, &city, &cols[j])?);
            }
            rows.push(city);
        }
        CountTable::new(rows, cols, counts)
    }

    fn from_long<I>(header: &csv::StringRecord, records: I) -> Result<Self>
    where
        I: Iterator<Item = std::result::Result<csv::StringRecord, csv::Error>>,
    {
        let expected = ["city", "code", "count"];
        let actual: Vec<&str> = header.iter().map(str::trim).collect();
        if actual != expected {
            return Err(DatasetError::malformed(
                1,
                "long header must be 'city,code,count'",
            ));
        }
        // Row and column order follow first appearance in the file.
        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        let mut row_index: HashMap<String, usize> = HashMap::new();
        let mut col_index: HashMap<String, usize> = HashMap::new();
        let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
        for rec in records {
            let rec = rec.map_err(super::csv_error)?;
            let line = record_line(&rec);
            if rec.len() != 3 {
                return Err(DatasetError::malformed(
                    line,
                    format!("expected 3 fields, found {}", rec.len()),
                ));
            }
            let city = rec[0].trim().to_string();
            let code = rec[1].trim().to_string();
            let count = parse_count(&rec[2], line, &city, &code)?;
            let r = *row_index.entry(city.clone()).or_insert_with(|| {
                rows.push(city.clone());
                rows.len() - 1
            });
            let c = *col_index.entry(code.clone()).or_insert_with(|| {
                cols.push(code.clone());
                cols.len() - 1
            });
            if cells.insert((r, c), count).is_some() {
                return Err(DatasetError::DuplicateKey {
                    key: format!("{city},{code}"),
                });
            }
        }
        if rows.is_empty() || cols.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        let mut counts = vec![0u64; rows.len() * cols.len()];
        for ((r, c), v) in cells {
            counts[r * cols.len() + c] = v;
        }
        CountTable::new(rows, cols, counts)
    }

    fn write(&self, path: &Path, schema: TableSchema) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(super::csv_error)?;
        match schema {
            TableSchema::Wide => {
                let mut header = vec!["city".to_string()];
                header.extend(self.cols.iter().cloned());
                writer.write_record(&header).map_err(super::csv_error)?;
                for (i, city) in self.rows.iter().enumerate() {
                    let mut rec = vec![city.clone()];
                    rec.extend(self.row(i).iter().map(|c| c.to_string()));
                    writer.write_record(&rec).map_err(super::csv_error)?;
                }
            }
            TableSchema::Long => {
                // Canonical long form is dense: zero cells are written too,
                // otherwise an occupation nobody employs would vanish on
                // reload.
                writer
                    .write_record(["city", "code", "count"])
                    .map_err(super::csv_error)?;
                for (i, city) in self.rows.iter().enumerate() {
                    for (j, code) in self.cols.iter().enumerate() {
                        writer
                            .write_record([city.as_str(), code.as_str(), &self.row(i)[j].to_string()])
                            .map_err(super::csv_error)?;
                    }
                }
            }
        }
        writer.flush()?;
        Ok(())
    }
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_count(field: &str, line: u64, city: &str, code: &str) -> Result<u64> {
    let trimmed = field.trim();
    // Accept ASCII and Unicode minus so a bad sign reports as NegativeCount.
    let value: i64 = trimmed
        .replace('\u{2212}', "-")
        .parse()
        .map_err(|_| DatasetError::malformed(line, format!("'{trimmed}' is not an integer count")))?;
    if value < 0 {
        return Err(DatasetError::NegativeCount {
            line,
            city: city.to_string(),
            code: code.to_string(),
            value,
        });
    }
    Ok(value as u64)
}

/// City-by-occupation worker counts; the pipeline's central matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmploymentTable {
    inner: CountTable,
    occupations: Vec<OccupationId>,
}

impl EmploymentTable {
    /// Builds a validated table from in-memory parts.
    pub fn from_parts(
        cities: Vec<String>,
        occupations: Vec<OccupationId>,
        counts: Vec<u64>,
    ) -> Result<Self> {
        let cols = occupations.iter().map(|o| o.code.clone()).collect();
        let inner = CountTable::new(cities, cols, counts)?;
        Ok(EmploymentTable { inner, occupations })
    }

    /// Loads a table from `path` under the declared schema.
    pub fn load(path: impl AsRef<Path>, schema: TableSchema) -> Result<Self> {
        let inner = CountTable::load(path.as_ref(), schema)?;
        let occupations = inner.cols.iter().map(OccupationId::new).collect();
        Ok(EmploymentTable { inner, occupations })
    }

    /// Serializes the table back to disk in the declared schema.
    pub fn write(&self, path: impl AsRef<Path>, schema: TableSchema) -> Result<()> {
        self.inner.write(path.as_ref(), schema)
    }

    pub fn cities(&self) -> &[String] {
        &self.inner.rows
    }

    pub fn occupations(&self) -> &[OccupationId] {
        &self.occupations
    }

    pub fn city_position(&self, city: &str) -> Option<usize> {
        self.inner.row_index.get(city).copied()
    }

    pub fn occupation_position(&self, code: &str) -> Option<usize> {
        self.inner.col_index.get(code).copied()
    }

    /// Counts for one city, ordered like [`Self::occupations`].
    pub fn row(&self, city_idx: usize) -> &[u64] {
        self.inner.row(city_idx)
    }

    pub fn count(&self, city_idx: usize, occ_idx: usize) -> u64 {
        self.inner.row(city_idx)[occ_idx]
    }

    /// Total workers in one city; positive by construction.
    pub fn city_total(&self, city_idx: usize) -> u64 {
        self.inner.row(city_idx).iter().sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.inner.counts.iter().sum()
    }
}

/// City-by-industry worker counts (95 subsectors or 20 sectors, per input).
#[derive(Debug, Clone, PartialEq)]
pub struct IndustryTable {
    inner: CountTable,
}

impl IndustryTable {
    pub fn from_parts(cities: Vec<String>, industries: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        Ok(IndustryTable {
            inner: CountTable::new(cities, industries, counts)?,
        })
    }

    pub fn load(path: impl AsRef<Path>, schema: TableSchema) -> Result<Self> {
        Ok(IndustryTable {
            inner: CountTable::load(path.as_ref(), schema)?,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>, schema: TableSchema) -> Result<()> {
        self.inner.write(path.as_ref(), schema)
    }

    pub fn cities(&self) -> &[String] {
        &self.inner.rows
    }

    pub fn industries(&self) -> &[String] {
        &self.inner.cols
    }

    pub fn city_position(&self, city: &str) -> Option<usize> {
        self.inner.row_index.get(city).copied()
    }

    pub fn row(&self, city_idx: usize) -> &[u64] {
        self.inner.row(city_idx)
    }

    /// Sums columns into named groups, preserving first-appearance group order.
    ///
    /// `mapping` sends an industry code to its group; codes missing from the
    /// mapping keep their own code as the group.
    pub fn aggregate_columns(&self, mapping: &HashMap<String, String>) -> Result<IndustryTable> {
        let mut groups: Vec<String> = Vec::new();
        let mut group_index: HashMap<String, usize> = HashMap::new();
        let col_to_group: Vec<usize> = self
            .inner
            .cols
            .iter()
            .map(|code| {
                let group = mapping.get(code).cloned().unwrap_or_else(|| code.clone());
                *group_index.entry(group.clone()).or_insert_with(|| {
                    groups.push(group.clone());
                    groups.len() - 1
                })
            })
            .collect();
        let mut counts = vec![0u64; self.inner.rows.len() * groups.len()];
        for (i, _) in self.inner.rows.iter().enumerate() {
            for (j, &g) in col_to_group.iter().enumerate() {
                counts[i * groups.len() + g] += self.inner.row(i)[j];
            }
        }
        IndustryTable::from_parts(self.inner.rows.clone(), groups, counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn wide_load_preserves_order_and_totals() {
        let f = write_temp("city,a,b,c,d\nX,1,2,3,4\nY,5,6,7,8\nZ,9,10,11,12\n");
        let t = EmploymentTable::load(f.path(), TableSchema::Wide).unwrap();
        assert_eq!(t.cities(), ["X", "Y", "Z"]);
        assert_eq!(
            t.occupations().iter().map(|o| o.code.as_str()).collect::<Vec<_>>(),
            ["a", "b", "c", "d"]
        );
        assert_eq!(t.city_total(0), 10);
        assert_eq!(t.city_total(1), 26);
        assert_eq!(t.city_total(2), 42);
    }

    #[test]
    fn negative_count_reports_cell() {
        let f = write_temp("city,a,b\nX,1,-5\n");
        let err = EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err();
        match err {
            DatasetError::NegativeCount { city, code, value, line } => {
                assert_eq!(city, "X");
                assert_eq!(code, "b");
                assert_eq!(value, -5);
                assert_eq!(line, 2);
            }
            other => panic!("expected NegativeCount, got {other:?}"),
        }
    }

    #[test]
    fn unicode_minus_is_negative_count() {
        let f = write_temp("city,a\nX,\u{2212}5\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err(),
            DatasetError::NegativeCount { .. }
        ));
    }

    #[test]
    fn long_and_wide_encodings_agree() {
        let wide = write_temp("city,p,q\nA,3,0\nB,1,7\n");
        let long = write_temp("city,code,count\nA,p,3\nB,p,1\nB,q,7\n");
        let from_wide = EmploymentTable::load(wide.path(), TableSchema::Wide).unwrap();
        let from_long = EmploymentTable::load(long.path(), TableSchema::Long).unwrap();
        assert_eq!(from_wide, from_long);
    }

    #[test]
    fn empty_city_rejected() {
        let f = write_temp("city,a,b\nX,0,0\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err(),
            DatasetError::EmptyCity { .. }
        ));
    }

    #[test]
    fn duplicate_city_rejected() {
        let f = write_temp("city,a\nX,1\nX,2\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err(),
            DatasetError::DuplicateKey { .. }
        ));
    }

    #[test]
    fn duplicate_long_cell_rejected() {
        let f = write_temp("city,code,count\nA,p,3\nA,p,4\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Long).unwrap_err(),
            DatasetError::DuplicateKey { .. }
        ));
    }

    #[test]
    fn zero_columns_rejected() {
        let f = write_temp("city\nX\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err(),
            DatasetError::EmptyTable
        ));
    }

    #[test]
    fn malformed_count_reports_line() {
        let f = write_temp("city,a\nX,1\nY,abc\n");
        match EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err() {
            DatasetError::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn write_then_load_round_trips_both_schemas() {
        let t = EmploymentTable::from_parts(
            vec!["X".into(), "Y".into()],
            vec![OccupationId::new("a"), OccupationId::new("b")],
            vec![3, 0, 1, 7],
        )
        .unwrap();
        for schema in [TableSchema::Wide, TableSchema::Long] {
            let f = tempfile::NamedTempFile::new().unwrap();
            t.write(f.path(), schema).unwrap();
            let back = EmploymentTable::load(f.path(), schema).unwrap();
            assert_eq!(back, t);
            // Canonical serialization is a fixed point byte-for-byte.
            let f2 = tempfile::NamedTempFile::new().unwrap();
            back.write(f2.path(), schema).unwrap();
            assert_eq!(
                std::fs::read(f.path()).unwrap(),
                std::fs::read(f2.path()).unwrap()
            );
        }
    }

    #[test]
    fn quoted_city_with_comma_loads() {
        let f = write_temp("city,a,b\n\"City, The\",1,2\nPlain,3,4\n");
        let t = EmploymentTable::load(f.path(), TableSchema::Wide).unwrap();
        assert_eq!(t.cities(), ["City, The", "Plain"]);
        // and survives a canonical write/load cycle
        let out = tempfile::NamedTempFile::new().unwrap();
        t.write(out.path(), TableSchema::Wide).unwrap();
        assert_eq!(EmploymentTable::load(out.path(), TableSchema::Wide).unwrap(), t);
    }

    #[test]
    fn occupation_code_with_space_rejected() {
        let f = write_temp("city,bad code\nX,1\n");
        assert!(matches!(
            EmploymentTable::load(f.path(), TableSchema::Wide).unwrap_err(),
            DatasetError::MalformedRow { .. }
        ));
    }

    #[test]
    fn aggregate_columns_sums_groups() {
        let t = IndustryTable::from_parts(
            vec!["X".into()],
            vec!["i1".into(), "i2".into(), "i3".into()],
            vec![1, 2, 4],
        )
        .unwrap();
        let mapping: HashMap<String, String> = [
            ("i1".to_string(), "g".to_string()),
            ("i2".to_string(), "g".to_string()),
        ]
        .into_iter()
        .collect();
        let agg = t.aggregate_columns(&mapping).unwrap();
        assert_eq!(agg.industries(), ["g", "i3"]);
        assert_eq!(agg.row(0), [3, 4]);
    }
}
