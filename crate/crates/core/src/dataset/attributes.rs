//! Per-city covariates: size, administrative status, premium resources,
//! coordinates, and free-form numeric extras.

use std::collections::BTreeMap;
use std::path::Path;

use super::{csv_error, DatasetError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CityAttributes {
    pub city: String,
    /// Worker count; when absent, downstream code falls back to the
    /// employment-table row sum.
    pub size: Option<u64>,
    /// High administrative status (municipality, sub-provincial city,
    /// provincial capital). Supplied, never inferred.
    pub elite: Option<bool>,
    /// Universities funded under the national flagship programs.
    pub universities: Option<u64>,
    /// Daily operating frequency of bullet trains.
    pub bullet_trains: Option<u64>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    /// Named numeric covariates (fixed_assets, net_population_gain, ...).
    pub extras: BTreeMap<String, f64>,
}

impl CityAttributes {
    pub fn new(city: impl Into<String>) -> Self {
        CityAttributes {
            city: city.into(),
            ..CityAttributes::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(0) = self.size {
            return Err(DatasetError::NonPositiveSize {
                city: self.city.clone(),
            });
        }
        if let Some(lat) = self.latitude {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(DatasetError::OutOfRangeCoordinate {
                    city: self.city.clone(),
                    field: "lat".into(),
                    value: lat,
                });
            }
        }
        if let Some(lon) = self.longitude {
            if !(-180.0..=180.0).contains(&lon) {
                return Err(DatasetError::OutOfRangeCoordinate {
                    city: self.city.clone(),
                    field: "lon".into(),
                    value: lon,
                });
            }
        }
        Ok(())
    }
}

const KNOWN_COLUMNS: [&str; 7] = [
    "city",
    "size",
    "elite",
    "universities",
    "bullet_trains",
    "lat",
    "lon",
];

/// Loads the `city,size,elite,universities,bullet_trains,lat,lon,<extras...>`
/// format. Any column order is accepted; unknown columns become extras; an
/// empty cell means the field is absent.
pub fn load_city_attributes(path: impl AsRef<Path>) -> Result<Vec<CityAttributes>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(DatasetError::EmptyTable),
    };
    let columns: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if !columns.iter().any(|c| c == "city") {
        return Err(DatasetError::MissingColumn { name: "city".into() });
    }

    let mut out: Vec<CityAttributes> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != columns.len() {
            return Err(DatasetError::malformed(
                line,
                format!("expected {} fields, found {}", columns.len(), rec.len()),
            ));
        }
        let mut attrs = CityAttributes::default();
        for (column, raw) in columns.iter().zip(rec.iter()) {
            let field = raw.trim();
            if field.is_empty() && column != "city" {
                continue;
            }
            match column.as_str() {
                "city" => attrs.city = field.to_string(),
                "size" => attrs.size = Some(parse_nonneg_int(field, line, column)?),
                "elite" => attrs.elite = Some(parse_bool(field, line)?),
                "universities" => attrs.universities = Some(parse_nonneg_int(field, line, column)?),
                "bullet_trains" => attrs.bullet_trains = Some(parse_nonneg_int(field, line, column)?),
                "lat" => attrs.latitude = Some(parse_float(field, line, column)?),
                "lon" => attrs.longitude = Some(parse_float(field, line, column)?),
                extra => {
                    attrs
                        .extras
                        .insert(extra.to_string(), parse_float(field, line, column)?);
                }
            }
        }
        if attrs.city.is_empty() {
            return Err(DatasetError::malformed(line, "empty city id"));
        }
        if attrs.city.contains('\n') || attrs.city.contains('"') {
            return Err(DatasetError::malformed(
                line,
                format!("city id '{}' contains a forbidden character", attrs.city),
            ));
        }
        if !seen.insert(attrs.city.clone()) {
            return Err(DatasetError::DuplicateKey { key: attrs.city });
        }
        attrs.validate()?;
        out.push(attrs);
    }
    Ok(out)
}

/// Serializes attributes in canonical column order, known columns first and
/// extras sorted by name. Absent fields are written as empty cells.
pub fn write_city_attributes(path: impl AsRef<Path>, attrs: &[CityAttributes]) -> Result<()> {
    let mut extra_names: Vec<String> = attrs
        .iter()
        .flat_map(|a| a.extras.keys().cloned())
        .collect();
    extra_names.sort();
    extra_names.dedup();

    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(csv_error)?;
    let mut header: Vec<String> = KNOWN_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(extra_names.iter().cloned());
    writer.write_record(&header).map_err(csv_error)?;

    for a in attrs {
        let mut rec: Vec<String> = vec![
            a.city.clone(),
            a.size.map(|v| v.to_string()).unwrap_or_default(),
            a.elite.map(|v| if v { "1" } else { "0" }.to_string()).unwrap_or_default(),
            a.universities.map(|v| v.to_string()).unwrap_or_default(),
            a.bullet_trains.map(|v| v.to_string()).unwrap_or_default(),
            a.latitude.map(|v| v.to_string()).unwrap_or_default(),
            a.longitude.map(|v| v.to_string()).unwrap_or_default(),
        ];
        for name in &extra_names {
            rec.push(a.extras.get(name).map(|v| v.to_string()).unwrap_or_default());
        }
        writer.write_record(&rec).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn parse_nonneg_int(field: &str, line: u64, column: &str) -> Result<u64> {
    let value: i64 = field
        .parse()
        .map_err(|_| DatasetError::malformed(line, format!("'{field}' is not an integer {column}")))?;
    if value < 0 {
        return Err(DatasetError::malformed(
            line,
            format!("{column} must be non-negative, got {value}"),
        ));
    }
    Ok(value as u64)
}

fn parse_bool(field: &str, line: u64) -> Result<bool> {
    match field.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(DatasetError::malformed(
            line,
            format!("'{other}' is not a boolean flag"),
        )),
    }
}

fn parse_float(field: &str, line: u64, column: &str) -> Result<f64> {
    let value: f64 = field
        .parse()
        .map_err(|_| DatasetError::malformed(line, format!("'{field}' is not a number for {column}")))?;
    if !value.is_finite() {
        return Err(DatasetError::malformed(
            line,
            format!("{column} must be finite, got '{field}'"),
        ));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn load_str(content: &str) -> Result<Vec<CityAttributes>> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        load_city_attributes(f.path())
    }

    #[test]
    fn parses_known_columns() {
        let attrs = load_str(
            "city,size,elite,universities,bullet_trains,lat,lon\nBeijing,1000,1,35,349,39.9,116.4\n",
        )
        .unwrap();
        assert_eq!(attrs.len(), 1);
        let beijing = &attrs[0];
        assert_eq!(beijing.universities, Some(35));
        assert_eq!(beijing.bullet_trains, Some(349));
        assert_eq!(beijing.elite, Some(true));
    }

    #[test]
    fn empty_cells_are_absent_not_defaulted() {
        let attrs = load_str("city,size,elite,universities,bullet_trains,lat,lon\nA,10,,,,,\n").unwrap();
        let a = &attrs[0];
        assert_eq!(a.size, Some(10));
        assert_eq!(a.elite, None);
        assert_eq!(a.universities, None);
        assert_eq!(a.latitude, None);
    }

    #[test]
    fn unknown_column_goes_to_extras() {
        let attrs = load_str("city,size,fixed_assets\nA,10,123.5\n").unwrap();
        assert_eq!(attrs[0].extras.get("fixed_assets"), Some(&123.5));
    }

    #[test]
    fn out_of_range_latitude_rejected() {
        let err = load_str("city,lat,lon\nA,95,10\n").unwrap_err();
        assert!(matches!(err, DatasetError::OutOfRangeCoordinate { .. }));
    }

    #[test]
    fn zero_size_rejected() {
        let err = load_str("city,size\nA,0\n").unwrap_err();
        assert!(matches!(err, DatasetError::NonPositiveSize { .. }));
    }

    #[test]
    fn duplicate_city_rejected() {
        let err = load_str("city,size\nA,1\nA,2\n").unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateKey { .. }));
    }

    #[test]
    fn non_finite_extra_rejected() {
        let err = load_str("city,fixed_assets\nA,NaN\n").unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRow { .. }));
    }

    #[test]
    fn round_trip_with_extras() {
        let attrs = load_str("city,size,elite,universities,bullet_trains,lat,lon,fixed_assets\nA,10,1,2,3,30.5,114.25,99.5\nB,20,,,,,,\n").unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_city_attributes(f.path(), &attrs).unwrap();
        let back = load_city_attributes(f.path()).unwrap();
        assert_eq!(back, attrs);
        // canonical serialization is a byte-level fixed point
        let f2 = tempfile::NamedTempFile::new().unwrap();
        write_city_attributes(f2.path(), &back).unwrap();
        assert_eq!(
            std::fs::read(f.path()).unwrap(),
            std::fs::read(f2.path()).unwrap()
        );
    }
}
