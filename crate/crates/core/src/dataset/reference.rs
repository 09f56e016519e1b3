//! Bundled reference city list with published impact rates.
//!
//! Ships in `data/reference/reference_cities.csv`: one row per city with premium
//! resource counts, division flags, and the published expected job impact
//! rate in percent. Used by reference checks and as a worked example for
//! the grouping commands.

use std::path::Path;

use super::{csv_error, CityAttributes, DatasetError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCity {
    pub city: String,
    pub universities: u64,
    pub bullet_trains: u64,
    /// Published expected job impact rate, in percent (e.g. 63.83).
    pub impact_rate_pct: f64,
    pub elite: bool,
    pub premium: bool,
}

impl ReferenceCity {
    /// Published impact rate as a fraction in `[0, 1]`.
    pub fn impact_fraction(&self) -> f64 {
        self.impact_rate_pct / 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSummary {
    pub cities: usize,
    /// Mean published impact rate as a fraction.
    pub mean_impact: f64,
    pub elite_count: usize,
    pub non_elite_count: usize,
    pub premium_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceTable {
    pub cities: Vec<ReferenceCity>,
}

impl ReferenceTable {
    /// Loads a `city,universities,bullet_trains,impact_rate_pct,elite,premium` file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())
            .map_err(csv_error)?;
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(csv_error)?,
            None => return Err(DatasetError::EmptyTable),
        };
        let expected = [
            "city",
            "universities",
            "bullet_trains",
            "impact_rate_pct",
            "elite",
            "premium",
        ];
        let actual: Vec<&str> = header.iter().map(str::trim).collect();
        if actual != expected {
            return Err(DatasetError::malformed(1, "unexpected reference header"));
        }
        let mut cities = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != expected.len() {
                return Err(DatasetError::malformed(line, "expected 6 fields"));
            }
            let city = rec[0].trim().to_string();
            if !seen.insert(city.clone()) {
                return Err(DatasetError::DuplicateKey { key: city });
            }
            let parse_u = |i: usize| -> Result<u64> {
                rec[i]
                    .trim()
                    .parse()
                    .map_err(|_| DatasetError::malformed(line, format!("bad integer '{}'", &rec[i])))
            };
            let impact_rate_pct: f64 = rec[3]
                .trim()
                .parse()
                .map_err(|_| DatasetError::malformed(line, format!("bad rate '{}'", &rec[3])))?;
            cities.push(ReferenceCity {
                city,
                universities: parse_u(1)?,
                bullet_trains: parse_u(2)?,
                impact_rate_pct,
                elite: rec[4].trim() == "1",
                premium: rec[5].trim() == "1",
            });
        }
        if cities.is_empty() {
            return Err(DatasetError::EmptyTable);
        }
        Ok(ReferenceTable { cities })
    }

    pub fn get(&self, city: &str) -> Option<&ReferenceCity> {
        self.cities.iter().find(|c| c.city == city)
    }

    pub fn summary(&self) -> ReferenceSummary {
        let n = self.cities.len();
        let elite_count = self.cities.iter().filter(|c| c.elite).count();
        ReferenceSummary {
            cities: n,
            mean_impact: self.cities.iter().map(|c| c.impact_fraction()).sum::<f64>() / n as f64,
            elite_count,
            non_elite_count: n - elite_count,
            premium_count: self.cities.iter().filter(|c| c.premium).count(),
        }
    }

    /// Converts to city attributes for the grouping operations. The
    /// published impact lands in `extras["published_impact"]` as a fraction.
    pub fn to_attributes(&self) -> Vec<CityAttributes> {
        self.cities
            .iter()
            .map(|c| {
                let mut a = CityAttributes::new(c.city.clone());
                a.elite = Some(c.elite);
                a.universities = Some(c.universities);
                a.bullet_trains = Some(c.bullet_trains);
                a.extras
                    .insert("published_impact".into(), c.impact_fraction());
                a
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reference/reference_cities.csv");

    #[test]
    fn bundled_table_loads_with_102_cities() {
        let table = ReferenceTable::load(BUNDLED).unwrap();
        assert_eq!(table.cities.len(), 102);
    }

    #[test]
    fn beijing_row_reads_back_exactly() {
        let table = ReferenceTable::load(BUNDLED).unwrap();
        let beijing = table.get("Beijing").unwrap();
        assert_eq!(beijing.universities, 35);
        assert_eq!(beijing.bullet_trains, 349);
        assert_eq!(beijing.impact_rate_pct, 63.83);
        assert!(beijing.elite);
        assert!(beijing.premium);
    }

    #[test]
    fn division_counts() {
        let summary = ReferenceTable::load(BUNDLED).unwrap().summary();
        assert_eq!(summary.elite_count, 19);
        assert_eq!(summary.non_elite_count, 83);
    }
}
