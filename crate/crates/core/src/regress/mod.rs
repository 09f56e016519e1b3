//! Ordinary least squares with log transforms, scaling exponents, grouped
//! fits, and Simpson's-paradox detection.
//!
//! All log transforms are base 10. The slope's two-sided p-value comes from
//! the exact t distribution with n - 2 degrees of freedom. Non-positive
//! values under a requested log transform are hard errors naming the
//! offending city; silently dropping them would bias scaling fits.

mod tdist;

pub use tdist::{regularized_incomplete_beta, student_t_cdf, two_sided_p};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::structure::CityGrouping;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("predictor has zero variance")]
    ZeroVariance,
    #[error("x and y have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("'{metric}' for city '{city}' is {value}, not positive under log transform")]
    NonPositiveUnderLog {
        city: String,
        metric: String,
        value: f64,
    },
    #[error("value at position {index} is not positive under log transform")]
    NonPositiveValue { index: usize },
    #[error("metric '{metric}' missing for city '{city}'")]
    MissingValue { city: String, metric: String },
    #[error("city '{0}' has no group label")]
    MissingGroupLabel(String),
    #[error("a grouping with exactly 2 groups is required")]
    MissingGrouping,
    #[error("group '{group}' cannot be fitted: {reason}")]
    GroupFitFailed { group: String, reason: String },
}

pub type Result<T> = std::result::Result<T, RegressError>;

/// Per-city metric values keyed `city -> metric -> value`.
pub type MetricFrame = BTreeMap<String, BTreeMap<String, f64>>;

/// What to regress on what, with optional log transforms and grouping.
#[derive(Debug, Clone)]
pub struct RegressionSpec {
    pub response: String,
    pub predictor: String,
    pub log_x: bool,
    pub log_y: bool,
    pub grouping: Option<CityGrouping>,
}

impl RegressionSpec {
    pub fn new(response: impl Into<String>, predictor: impl Into<String>) -> Self {
        let spec = RegressionSpec {
            response: response.into(),
            predictor: predictor.into(),
            log_x: false,
            log_y: false,
            grouping: None,
        };
        assert_ne!(spec.response, spec.predictor, "response equals predictor");
        spec
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with_grouping(mut self, grouping: CityGrouping) -> Self {
        self.grouping = Some(grouping);
        self
    }
}

/// One fitted line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub group: String,
    pub beta: f64,
    pub intercept: f64,
    pub p_value: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn with_group(mut self, label: impl Into<String>) -> Self {
        self.group = label.into();
        self
    }

    /// `group,beta,intercept,p_value,r_squared,n` row.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.group, self.beta, self.intercept, self.p_value, self.r_squared, self.n
        )
    }
}

/// Header for [`RegressionResult::csv_row`] exports.
pub const RESULT_CSV_HEADER: &str = "group,beta,intercept,p_value,r_squared,n";

/// Closed-form simple least squares with exact t-based inference.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<RegressionResult> {
    if xs.len() != ys.len() {
        return Err(RegressError::LengthMismatch {
            x: xs.len(),
            y: ys.len(),
        });
    }
    let n = xs.len();
    if n < 3 {
        return Err(RegressError::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(RegressError::ZeroVariance);
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let beta = sxy / sxx;
    let intercept = y_mean - beta * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + beta * x)).powi(2))
        .sum();
    let sst: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let df = (n - 2) as f64;
    let se_sq = sse / df / sxx;
    let p_value = if se_sq > 0.0 {
        two_sided_p(beta / se_sq.sqrt(), df)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(RegressionResult {
        group: "pooled".into(),
        beta,
        intercept,
        p_value,
        r_squared,
        n,
    })
}

/// A grouped fit: the pooled result first, then one result per group in
/// scheme order. Groups too small or degenerate to fit are listed in
/// `skipped` with the reason instead of failing the whole fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub results: Vec<RegressionResult>,
    pub skipped: Vec<(String, String)>,
}

impl FitReport {
    pub fn pooled(&self) -> &RegressionResult {
        &self.results[0]
    }

    pub fn group(&self, label: &str) -> Option<&RegressionResult> {
        self.results.iter().find(|r| r.group == label)
    }
}

/// Resolves the requested response and predictor against per-city
/// metrics and fits pooled plus per-group lines.
pub fn fit(spec: &RegressionSpec, frame: &MetricFrame) -> Result<FitReport> {
    let mut cities: Vec<&str> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (city, metrics) in frame {
        let x = resolve(metrics, city, &spec.predictor)?;
        let y = resolve(metrics, city, &spec.response)?;
        let x = transform(x, spec.log_x, city, &spec.predictor)?;
        let y = transform(y, spec.log_y, city, &spec.response)?;
        cities.push(city);
        xs.push(x);
        ys.push(y);
    }
    let pooled = ols(&xs, &ys)?;
    let mut report = FitReport {
        results: vec![pooled],
        skipped: Vec::new(),
    };
    if let Some(grouping) = &spec.grouping {
        let (first, second) = grouping.scheme.labels();
        for label in [first, second] {
            let mut gx = Vec::new();
            let mut gy = Vec::new();
            for (i, city) in cities.iter().enumerate() {
                let got = grouping
                    .group_of(city)
                    .ok_or_else(|| RegressError::MissingGroupLabel(city.to_string()))?;
                if got == label {
                    gx.push(xs[i]);
                    gy.push(ys[i]);
                }
            }
            match ols(&gx, &gy) {
                Ok(result) => report.results.push(result.with_group(label)),
                Err(err) => report.skipped.push((label.to_string(), err.to_string())),
            }
        }
    }
    Ok(report)
}

fn resolve(metrics: &BTreeMap<String, f64>, city: &str, metric: &str) -> Result<f64> {
    metrics
        .get(metric)
        .copied()
        .ok_or_else(|| RegressError::MissingValue {
            city: city.to_string(),
            metric: metric.to_string(),
        })
}

fn transform(value: f64, log: bool, city: &str, metric: &str) -> Result<f64> {
    if !log {
        return Ok(value);
    }
    if value <= 0.0 {
        return Err(RegressError::NonPositiveUnderLog {
            city: city.to_string(),
            metric: metric.to_string(),
            value,
        });
    }
    Ok(value.log10())
}

/// Log-log slope of occupation counts against city size. Beta above 1 is
/// super-linear growth, below 1 sub-linear.
pub fn scaling_exponent(city_sizes: &[f64], occupation_counts: &[f64]) -> Result<RegressionResult> {
    if city_sizes.len() != occupation_counts.len() {
        return Err(RegressError::LengthMismatch {
            x: city_sizes.len(),
            y: occupation_counts.len(),
        });
    }
    for (index, value) in city_sizes.iter().chain(occupation_counts).enumerate() {
        if *value <= 0.0 {
            return Err(RegressError::NonPositiveValue {
                index: index % city_sizes.len(),
            });
        }
    }
    let xs: Vec<f64> = city_sizes.iter().map(|v| v.log10()).collect();
    let ys: Vec<f64> = occupation_counts.iter().map(|v| v.log10()).collect();
    ols(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimpsonVerdict {
    #[serde(rename = "PARADOX")]
    Paradox,
    #[serde(rename = "NO_PARADOX")]
    NoParadox,
}

/// Pooled and per-group fits with the paradox verdict and the criteria
/// echoed verbatim.
#[derive(Debug, Clone, Serialize)]
pub struct SimpsonReport {
    pub pooled: RegressionResult,
    pub groups: Vec<RegressionResult>,
    pub verdict: SimpsonVerdict,
    pub reason: String,
    pub significance: f64,
    pub criteria: String,
}

const SIMPSON_CRITERIA: &str = "PARADOX requires: (pooled p > significance OR pooled slope sign \
differs from both group slopes) AND both group fits significant AND group slopes of opposite sign";

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Runs the grouped fit and applies the paradox criteria. A grouping is
/// required; both groups need at least 3 members.
pub fn simpson_check(
    spec: &RegressionSpec,
    frame: &MetricFrame,
    significance: f64,
) -> Result<SimpsonReport> {
    if spec.grouping.is_none() {
        return Err(RegressError::MissingGrouping);
    }
    let report = fit(spec, frame)?;
    if let Some((group, reason)) = report.skipped.first() {
        return Err(RegressError::GroupFitFailed {
            group: group.clone(),
            reason: reason.clone(),
        });
    }
    let pooled = report.results[0].clone();
    let groups = vec![report.results[1].clone(), report.results[2].clone()];

    let opposite = sign(groups[0].beta) * sign(groups[1].beta) < 0;
    let both_significant = groups.iter().all(|g| g.p_value < significance);
    let pooled_insignificant = pooled.p_value > significance;
    let pooled_reversed =
        sign(pooled.beta) != sign(groups[0].beta) && sign(pooled.beta) != sign(groups[1].beta);

    let (verdict, reason) = if !opposite {
        (
            SimpsonVerdict::NoParadox,
            "group slopes share the same sign".to_string(),
        )
    } else if !both_significant {
        let weak: Vec<String> = groups
            .iter()
            .filter(|g| g.p_value >= significance)
            .map(|g| format!("{} (p={})", g.group, g.p_value))
            .collect();
        (
            SimpsonVerdict::NoParadox,
            format!("group fit not significant: {}", weak.join(", ")),
        )
    } else if !(pooled_insignificant || pooled_reversed) {
        (
            SimpsonVerdict::NoParadox,
            format!(
                "pooled fit is significant (p={}) and shares a group's slope sign",
                pooled.p_value
            ),
        )
    } else {
        (
            SimpsonVerdict::Paradox,
            format!(
                "pooled association {} while groups split {:+} / {:+}",
                if pooled_insignificant {
                    format!("is absent (p={})", pooled.p_value)
                } else {
                    "reverses sign".to_string()
                },
                groups[0].beta,
                groups[1].beta
            ),
        )
    };

    Ok(SimpsonReport {
        pooled,
        groups,
        verdict,
        reason,
        significance,
        criteria: SIMPSON_CRITERIA.to_string(),
    })
}

impl SimpsonReport {
    /// Plain-text rendering: pooled row, group rows, verdict, criteria.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(RESULT_CSV_HEADER);
        out.push('\n');
        out.push_str(&self.pooled.csv_row());
        out.push('\n');
        for g in &self.groups {
            out.push_str(&g.csv_row());
            out.push('\n');
        }
        out.push_str(&format!(
            "verdict: {}\nreason: {}\nsignificance: {}\ncriteria: {}\n",
            match self.verdict {
                SimpsonVerdict::Paradox => "PARADOX",
                SimpsonVerdict::NoParadox => "NO_PARADOX",
            },
            self.reason,
            self.significance,
            self.criteria
        ));
        out
    }
}
