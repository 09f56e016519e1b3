//! Pipeline configuration: input paths, parameters, output directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::dataset::TableSchema;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("i/o error reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field '{field}': {message}")]
    Invalid { field: String, message: String },
    #[error("referenced path does not exist: {0}")]
    MissingPath(PathBuf),
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    inputs: RawInputs,
    #[serde(default)]
    parameters: RawParameters,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInputs {
    employment: Option<String>,
    #[serde(default = "default_schema")]
    employment_schema: String,
    industry: Option<String>,
    #[serde(default = "default_schema")]
    industry_schema: String,
    risk: Option<String>,
    attributes: Option<String>,
    votes: Option<String>,
    sector_map: Option<String>,
    elite_coordinates: Option<String>,
    zero_override: Option<String>,
}

fn default_schema() -> String {
    "wide".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
struct RawParameters {
    advantage_cutoff: Option<f64>,
    proximity_threshold: Option<f64>,
    kmeans_seed: Option<u64>,
    kmeans_restarts: Option<u32>,
    significance: Option<f64>,
    pca_components: Option<usize>,
    annotators: Option<u32>,
    crosswalk_threshold: Option<u32>,
}


#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
}

/// Fully resolved pipeline configuration. All paths are absolute or
/// relative to the process working directory after resolution against the
/// config file's own location.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub employment: Option<PathBuf>,
    pub employment_schema: TableSchema,
    pub industry: Option<PathBuf>,
    pub industry_schema: TableSchema,
    pub risk: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub votes: Option<PathBuf>,
    pub sector_map: Option<PathBuf>,
    pub elite_coordinates: Option<PathBuf>,
    pub zero_override: Option<PathBuf>,
    pub advantage_cutoff: f64,
    pub proximity_threshold: f64,
    pub kmeans_seed: u64,
    pub kmeans_restarts: u32,
    pub significance: f64,
    pub pca_components: usize,
    pub annotators: u32,
    pub crosswalk_threshold: u32,
    pub output_directory: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            employment: None,
            employment_schema: TableSchema::Wide,
            industry: None,
            industry_schema: TableSchema::Wide,
            risk: None,
            attributes: None,
            votes: None,
            sector_map: None,
            elite_coordinates: None,
            zero_override: None,
            advantage_cutoff: 1.0,
            proximity_threshold: 0.66,
            kmeans_seed: 42,
            kmeans_restarts: 10,
            significance: 0.05,
            pca_components: 2,
            annotators: 3,
            crosswalk_threshold: 2,
            output_directory: PathBuf::from("out"),
        }
    }
}

fn parse_schema(field: &str, value: &str) -> Result<TableSchema, ConfigError> {
    match value {
        "wide" => Ok(TableSchema::Wide),
        "long" => Ok(TableSchema::Long),
        other => Err(invalid(field, format!("unknown schema '{other}' (wide|long)"))),
    }
}

impl PipelineConfig {
    /// Reads a TOML config. Relative input paths resolve against the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let raw: RawConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &Option<String>| p.as_ref().map(|p| base.join(p));

        let defaults = PipelineConfig::default();
        let config = PipelineConfig {
            employment: resolve(&raw.inputs.employment),
            employment_schema: parse_schema("inputs.employment_schema", &raw.inputs.employment_schema)?,
            industry: resolve(&raw.inputs.industry),
            industry_schema: parse_schema("inputs.industry_schema", &raw.inputs.industry_schema)?,
            risk: resolve(&raw.inputs.risk),
            attributes: resolve(&raw.inputs.attributes),
            votes: resolve(&raw.inputs.votes),
            sector_map: resolve(&raw.inputs.sector_map),
            elite_coordinates: resolve(&raw.inputs.elite_coordinates),
            zero_override: resolve(&raw.inputs.zero_override),
            advantage_cutoff: raw.parameters.advantage_cutoff.unwrap_or(defaults.advantage_cutoff),
            proximity_threshold: raw
                .parameters
                .proximity_threshold
                .unwrap_or(defaults.proximity_threshold),
            kmeans_seed: raw.parameters.kmeans_seed.unwrap_or(defaults.kmeans_seed),
            kmeans_restarts: raw.parameters.kmeans_restarts.unwrap_or(defaults.kmeans_restarts),
            significance: raw.parameters.significance.unwrap_or(defaults.significance),
            pca_components: raw.parameters.pca_components.unwrap_or(defaults.pca_components),
            annotators: raw.parameters.annotators.unwrap_or(defaults.annotators),
            crosswalk_threshold: raw
                .parameters
                .crosswalk_threshold
                .unwrap_or(defaults.crosswalk_threshold),
            output_directory: raw
                .output
                .directory
                .map(|d| base.join(d))
                .unwrap_or(defaults.output_directory),
        };
        config.validate_parameters()?;
        Ok(config)
    }

    pub fn validate_parameters(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.proximity_threshold) {
            return Err(invalid("parameters.proximity_threshold", "must be in [0, 1]"));
        }
        if self.advantage_cutoff <= 0.0 {
            return Err(invalid("parameters.advantage_cutoff", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.significance) || self.significance <= 0.0 {
            return Err(invalid("parameters.significance", "must be in (0, 1)"));
        }
        if self.kmeans_restarts == 0 {
            return Err(invalid("parameters.kmeans_restarts", "must be at least 1"));
        }
        if self.crosswalk_threshold == 0 {
            return Err(invalid("parameters.crosswalk_threshold", "must be at least 1"));
        }
        if self.pca_components == 0 {
            return Err(invalid("parameters.pca_components", "must be at least 1"));
        }
        Ok(())
    }

    /// Checks that every referenced input path exists.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let paths = [
            &self.employment,
            &self.industry,
            &self.risk,
            &self.attributes,
            &self.votes,
            &self.sector_map,
            &self.elite_coordinates,
            &self.zero_override,
        ];
        for path in paths.into_iter().flatten() {
            if !path.exists() {
                return Err(ConfigError::MissingPath(path.clone()));
            }
        }
        Ok(())
    }
}
