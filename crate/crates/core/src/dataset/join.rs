//! Cross-table alignment checks run before any pipeline stage.

use std::collections::BTreeSet;

use super::{CityAttributes, EmploymentTable, RiskTable};

/// Result of aligning an employment table with a risk table and city
/// attributes. Report-only: nothing here mutates the inputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JoinReport {
    /// Occupations present in employment but missing from the risk table.
    /// A non-empty set blocks impact-rate computation.
    pub missing_risk: Vec<String>,
    /// Cities present in employment but missing from the attributes.
    pub missing_attributes: Vec<String>,
    /// Risk entries that match no employment occupation.
    pub unused_risk: Vec<String>,
    /// Attribute rows that match no employment city.
    pub unused_attributes: Vec<String>,
}

impl JoinReport {
    /// True when every set is empty.
    pub fn is_aligned(&self) -> bool {
        self.missing_risk.is_empty()
            && self.missing_attributes.is_empty()
            && self.unused_risk.is_empty()
            && self.unused_attributes.is_empty()
    }

    /// True when the pipeline must refuse to run (risk coverage is
    /// incomplete and no default policy was chosen).
    pub fn blocks_pipeline(&self) -> bool {
        !self.missing_risk.is_empty()
    }
}

/// Compares the id sets of the three inputs. Idempotent and side-effect
/// free; all lists come back sorted.
pub fn validate_join(
    emp: &EmploymentTable,
    risk: &RiskTable,
    attrs: &[CityAttributes],
) -> JoinReport {
    let emp_occs: BTreeSet<&str> = emp.occupations().iter().map(|o| o.code.as_str()).collect();
    let risk_occs: BTreeSet<&str> = risk.iter().map(|(code, _)| code).collect();
    let emp_cities: BTreeSet<&str> = emp.cities().iter().map(String::as_str).collect();
    let attr_cities: BTreeSet<&str> = attrs.iter().map(|a| a.city.as_str()).collect();

    JoinReport {
        missing_risk: emp_occs.difference(&risk_occs).map(|s| s.to_string()).collect(),
        missing_attributes: emp_cities.difference(&attr_cities).map(|s| s.to_string()).collect(),
        unused_risk: risk_occs.difference(&emp_occs).map(|s| s.to_string()).collect(),
        unused_attributes: attr_cities.difference(&emp_cities).map(|s| s.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::OccupationId;

    fn emp() -> EmploymentTable {
        EmploymentTable::from_parts(
            vec!["X".into(), "Y".into()],
            vec![
                OccupationId::new("a"),
                OccupationId::new("b"),
                OccupationId::new("c"),
                OccupationId::new("d"),
            ],
            vec![1, 2, 3, 4, 5, 6, 7, 8],
        )
        .unwrap()
    }

    fn attrs(cities: &[&str]) -> Vec<CityAttributes> {
        cities.iter().map(|c| CityAttributes::new(*c)).collect()
    }

    #[test]
    fn aligned_inputs_empty_report() {
        let risk = RiskTable::from_pairs([("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]).unwrap();
        let report = validate_join(&emp(), &risk, &attrs(&["X", "Y"]));
        assert!(report.is_aligned());
        assert!(!report.blocks_pipeline());
    }

    #[test]
    fn missing_risk_names_exact_code() {
        let risk = RiskTable::from_pairs([("a", 0.1), ("b", 0.2), ("c", 0.3)]).unwrap();
        let report = validate_join(&emp(), &risk, &attrs(&["X", "Y"]));
        assert_eq!(report.missing_risk, ["d"]);
        assert!(report.blocks_pipeline());
    }

    #[test]
    fn extra_attribute_city_listed_as_unused() {
        let risk = RiskTable::from_pairs([("a", 0.1), ("b", 0.2), ("c", 0.3), ("d", 0.4)]).unwrap();
        let report = validate_join(&emp(), &risk, &attrs(&["X", "Y", "Z"]));
        assert_eq!(report.unused_attributes, ["Z"]);
        assert!(!report.blocks_pipeline());
    }

    #[test]
    fn idempotent() {
        let risk = RiskTable::from_pairs([("a", 0.1)]).unwrap();
        let table = emp();
        let attrs = attrs(&["X"]);
        let first = validate_join(&table, &risk, &attrs);
        let second = validate_join(&table, &risk, &attrs);
        assert_eq!(first, second);
    }
}
