//! Analytical pipeline for estimating automation impacts on regional job
//! markets.
//!
//! The library covers the full chain from raw tables to reports:
//!
//! - [`dataset`] — loading and validating employment, industry, risk, and
//!   city-attribute tables; the canonical on-disk formats.
//! - [`crosswalk`] — multi-annotator occupation-taxonomy correspondence and
//!   risk transfer between taxonomies.
//! - [`metrics`] — per-city expected impact rate, normalized Shannon
//!   diversity, and revealed comparative advantage (RCA).
//! - [`occspace`] — the occupation space: proximity matrix, maximum spanning
//!   tree skeleton with threshold links, closeness centrality, city overlays.
//! - [`structure`] — industrial-structure PCA, k-means resource clustering,
//!   administrative grouping, and great-circle distances to elite cities.
//! - [`regress`] — OLS with log transforms, scaling exponents, grouped fits,
//!   and Simpson's-paradox detection.
//! - [`report`] — deterministic end-to-end pipeline with hashed manifests,
//!   driving the `laborscape` CLI.

pub mod config;
pub mod crosswalk;
pub mod dataset;
pub mod metrics;
pub mod occspace;
pub mod regress;
pub mod report;
pub mod structure;

pub use config::PipelineConfig;
pub use dataset::{
    CityAttributes, EmploymentTable, IndustryTable, JoinReport, OccupationId, RiskTable,
};
pub use metrics::{CityMetricVector, RcaMatrix};
pub use occspace::{CityOverlay, OccupationNetwork, ProximityMatrix};
pub use regress::{RegressionResult, RegressionSpec, SimpsonReport, SimpsonVerdict};
pub use structure::{CityGrouping, GroupScheme, PcaResult};
