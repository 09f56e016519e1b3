//! Per-city scalar metrics: expected impact rate, diversity entropies, and
//! revealed comparative advantage.

use thiserror::Error;

use crate::dataset::{EmploymentTable, IndustryTable, RiskTable};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("unknown city '{0}'")]
    UnknownCity(String),
    #[error("city '{city}' has positive count for '{code}' but no risk entry")]
    MissingRisk { city: String, code: String },
    #[error("city '{0}' has zero total employment")]
    EmptyCity(String),
    #[error("table has zero grand total")]
    EmptyTable,
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// One city's scalar metrics, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CityMetricVector {
    pub city: String,
    pub impact_rate: f64,
    pub job_diversity: f64,
    pub industry_diversity: f64,
}

/// Normalized Shannon entropy of a count vector, natural log in both the
/// entropy and the normalizer. Zero counts are excluded from the sum and
/// from the category cardinality; a single positive category is 0 by
/// convention (the distribution is maximally specialized).
pub fn normalized_entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let k = counts.iter().filter(|&&c| c > 0).count();
    if k <= 1 || total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    (entropy / (k as f64).ln()).clamp(0.0, 1.0)
}

/// Expected job impact rate: the employment-weighted mean computerization
/// probability over the city's occupations.
pub fn impact_rate(emp: &EmploymentTable, risk: &RiskTable, city: &str) -> Result<f64> {
    let row_idx = emp
        .city_position(city)
        .ok_or_else(|| MetricsError::UnknownCity(city.to_string()))?;
    let row = emp.row(row_idx);
    let total: u64 = row.iter().sum();
    if total == 0 {
        return Err(MetricsError::EmptyCity(city.to_string()));
    }
    let mut weighted = 0.0;
    for (occ, &count) in emp.occupations().iter().zip(row) {
        if count == 0 {
            continue;
        }
        let p = risk.get(&occ.code).ok_or_else(|| MetricsError::MissingRisk {
            city: city.to_string(),
            code: occ.code.clone(),
        })?;
        weighted += p * count as f64;
    }
    Ok(weighted / total as f64)
}

/// Normalized Shannon entropy of the city's occupation distribution.
pub fn job_diversity(emp: &EmploymentTable, city: &str) -> Result<f64> {
    let row_idx = emp
        .city_position(city)
        .ok_or_else(|| MetricsError::UnknownCity(city.to_string()))?;
    Ok(normalized_entropy(emp.row(row_idx)))
}

/// Normalized Shannon entropy of the city's industry distribution.
pub fn industry_diversity(ind: &IndustryTable, city: &str) -> Result<f64> {
    let row_idx = ind
        .city_position(city)
        .ok_or_else(|| MetricsError::UnknownCity(city.to_string()))?;
    Ok(normalized_entropy(ind.row(row_idx)))
}

/// Computes the full metric vector for every city, ordered as in `emp`.
pub fn city_metrics(
    emp: &EmploymentTable,
    risk: &RiskTable,
    ind: &IndustryTable,
) -> Result<Vec<CityMetricVector>> {
    emp.cities()
        .iter()
        .map(|city| {
            Ok(CityMetricVector {
                city: city.clone(),
                impact_rate: impact_rate(emp, risk, city)?,
                job_diversity: job_diversity(emp, city)?,
                industry_diversity: industry_diversity(ind, city)?,
            })
        })
        .collect()
}

/// Dense city-by-occupation matrix of revealed comparative advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    cities: Vec<String>,
    occupations: Vec<String>,
    values: Vec<f64>,
}

impl RcaMatrix {
    pub fn cities(&self) -> &[String] {
        &self.cities
    }

    pub fn occupations(&self) -> &[String] {
        &self.occupations
    }

    pub fn city_position(&self, city: &str) -> Option<usize> {
        self.cities.iter().position(|c| c == city)
    }

    pub fn value(&self, city_idx: usize, occ_idx: usize) -> f64 {
        self.values[city_idx * self.occupations.len() + occ_idx]
    }

    pub fn row(&self, city_idx: usize) -> &[f64] {
        &self.values[city_idx * self.occupations.len()..(city_idx + 1) * self.occupations.len()]
    }

    pub fn from_parts(cities: Vec<String>, occupations: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), cities.len() * occupations.len(), "rca shape");
        RcaMatrix {
            cities,
            occupations,
            values,
        }
    }
}

/// Location quotient of each (city, occupation) cell: the city's employment
/// share in the occupation relative to the national share. Occupations with
/// zero national total yield 0 everywhere.
pub fn rca(emp: &EmploymentTable) -> Result<RcaMatrix> {
    let grand_total = emp.grand_total();
    if grand_total == 0 {
        return Err(MetricsError::EmptyTable);
    }
    let n_occ = emp.occupations().len();
    let mut national = vec![0u64; n_occ];
    for i in 0..emp.cities().len() {
        for (j, &c) in emp.row(i).iter().enumerate() {
            national[j] += c;
        }
    }
    let grand_total = grand_total as f64;
    let mut values = Vec::with_capacity(emp.cities().len() * n_occ);
    for i in 0..emp.cities().len() {
        let city_total = emp.city_total(i) as f64;
        for (j, &count) in emp.row(i).iter().enumerate() {
            if count == 0 || national[j] == 0 {
                values.push(0.0);
            } else {
                let city_share = count as f64 / city_total;
                let national_share = national[j] as f64 / grand_total;
                values.push(city_share / national_share);
            }
        }
    }
    Ok(RcaMatrix {
        cities: emp.cities().to_vec(),
        occupations: emp.occupations().iter().map(|o| o.code.clone()).collect(),
        values,
    })
}
