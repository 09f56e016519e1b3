//! Industrial-structure analysis and city grouping.
//!
//! PCA over sector employment shares summarizes each city's industrial
//! orientation; k-means over premium-resource features (universities,
//! bullet-train frequency) splits cities into premium and non-premium;
//! the administrative division is a passthrough of the supplied elite
//! flag; and great-circle distances locate each city relative to the
//! nearest elite city.

mod geo;
mod kmeans;
mod pca;

pub use geo::{distance_to_nearest_elite, haversine_km, load_elite_coordinates};
pub use kmeans::kmeans_premium;
pub use pca::{pca_industry, pca_matrix, PcaResult};

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::dataset::CityAttributes;

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("city '{city}' is missing feature '{feature}'")]
    MissingFeature { city: String, feature: String },
    #[error("city '{0}' is missing the elite flag")]
    MissingFlag(String),
    #[error("city '{0}' is missing coordinates")]
    MissingCoordinates(String),
    #[error("clustering is degenerate: all feature vectors identical")]
    DegenerateClustering,
    #[error("zero variance in every column")]
    DegenerateData,
    #[error("requested {requested} components but data has {available} columns")]
    BadComponentCount { requested: usize, available: usize },
    #[error("input is empty or below the minimum size")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, StructureError>;

/// City division scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupScheme {
    /// k-means over premium-resource features.
    Premium,
    /// Administrative elite flag, supplied as data.
    Elite,
}

impl GroupScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupScheme::Premium => "premium",
            GroupScheme::Elite => "elite",
        }
    }

    /// The two group labels under this scheme, advantaged side first.
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            GroupScheme::Premium => ("premium", "non-premium"),
            GroupScheme::Elite => ("elite", "non-elite"),
        }
    }
}

/// A two-way split of cities under one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CityGrouping {
    pub scheme: GroupScheme,
    labels: BTreeMap<String, String>,
    /// Cluster centers in standardized feature space, for the k-means scheme.
    pub centroids: Option<Vec<Vec<f64>>>,
}

impl CityGrouping {
    /// Builds a grouping from externally supplied labels.
    pub fn new(
        scheme: GroupScheme,
        labels: BTreeMap<String, String>,
        centroids: Option<Vec<Vec<f64>>>,
    ) -> Self {
        CityGrouping {
            scheme,
            labels,
            centroids,
        }
    }

    pub fn group_of(&self, city: &str) -> Option<&str> {
        self.labels.get(city).map(String::as_str)
    }

    /// (city, label) pairs sorted by city id.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.labels.iter().map(|(c, l)| (c.as_str(), l.as_str()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count_of(&self, label: &str) -> usize {
        self.labels.values().filter(|l| *l == label).count()
    }

    /// Writes the `city,scheme,label` export.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv())?;
        Ok(())
    }

    /// The `city,scheme,label` table as a string, city ids quoted when
    /// they contain separators.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("city,scheme,label\n");
        for (city, label) in self.iter() {
            let city = if city.contains(',') {
                format!("\"{city}\"")
            } else {
                city.to_string()
            };
            out.push_str(&format!("{},{},{}\n", city, self.scheme.as_str(), label));
        }
        out
    }
}

/// Passthrough grouping from the administrative elite flag.
pub fn group_by_admin(attrs: &[CityAttributes]) -> Result<CityGrouping> {
    if attrs.is_empty() {
        return Err(StructureError::EmptyInput);
    }
    let (advantaged, other) = GroupScheme::Elite.labels();
    let mut labels = BTreeMap::new();
    for a in attrs {
        let elite = a.elite.ok_or_else(|| StructureError::MissingFlag(a.city.clone()))?;
        labels.insert(a.city.clone(), if elite { advantaged } else { other }.to_string());
    }
    let grouping = CityGrouping::new(GroupScheme::Elite, labels, None);
    for label in [advantaged, other] {
        if grouping.count_of(label) == 0 {
            log::warn!("administrative grouping is degenerate: no '{label}' cities");
        }
    }
    Ok(grouping)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs_with_flags(flags: &[(&str, Option<bool>)]) -> Vec<CityAttributes> {
        flags
            .iter()
            .map(|(city, flag)| {
                let mut a = CityAttributes::new(*city);
                a.elite = *flag;
                a
            })
            .collect()
    }

    #[test]
    fn admin_grouping_splits_by_flag() {
        let attrs = attrs_with_flags(&[("A", Some(true)), ("B", Some(false)), ("C", Some(false))]);
        let g = group_by_admin(&attrs).unwrap();
        assert_eq!(g.count_of("elite"), 1);
        assert_eq!(g.count_of("non-elite"), 2);
        assert_eq!(g.group_of("A"), Some("elite"));
    }

    #[test]
    fn missing_flag_is_an_error() {
        let attrs = attrs_with_flags(&[("A", Some(true)), ("B", None)]);
        assert!(matches!(
            group_by_admin(&attrs),
            Err(StructureError::MissingFlag(city)) if city == "B"
        ));
    }

    #[test]
    fn all_elite_is_degenerate_but_allowed() {
        let attrs = attrs_with_flags(&[("A", Some(true)), ("B", Some(true))]);
        let g = group_by_admin(&attrs).unwrap();
        assert_eq!(g.count_of("elite"), 2);
        assert_eq!(g.count_of("non-elite"), 0);
    }

    #[test]
    fn bundled_reference_has_19_elite() {
        let table = crate::dataset::ReferenceTable::load(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/data/reference/reference_cities.csv"
        ))
        .unwrap();
        let g = group_by_admin(&table.to_attributes()).unwrap();
        assert_eq!(g.count_of("elite"), 19);
        assert_eq!(g.count_of("non-elite"), 83);
    }
}
