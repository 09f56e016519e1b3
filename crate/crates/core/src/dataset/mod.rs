//! Input tables and their canonical on-disk formats.
//!
//! Every downstream module consumes the types defined here. Tables are
//! immutable after construction and validated on load: counts are
//! non-negative, city rows are non-empty, and ids are unique.

mod attributes;
mod join;
mod reference;
mod risk;
mod table;

pub use attributes::{load_city_attributes, write_city_attributes, CityAttributes};
pub use join::{validate_join, JoinReport};
pub use reference::{ReferenceCity, ReferenceSummary, ReferenceTable};
pub use risk::RiskTable;
pub use table::{EmploymentTable, IndustryTable, OccupationId, TableSchema};
pub(crate) use table::check_code;

use thiserror::Error;

/// Errors raised while loading or validating input tables.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: negative count {value} for ({city}, {code})")]
    NegativeCount {
        line: u64,
        city: String,
        code: String,
        value: i64,
    },
    #[error("duplicate key '{key}'")]
    DuplicateKey { key: String },
    #[error("city '{city}' has zero total count")]
    EmptyCity { city: String },
    #[error("table has no rows or no columns")]
    EmptyTable,
    #[error("city '{city}': {field} {value} out of range")]
    OutOfRangeCoordinate {
        city: String,
        field: String,
        value: f64,
    },
    #[error("city '{city}': size must be positive")]
    NonPositiveSize { city: String },
    #[error("risk for '{code}' is {value}, outside [0, 1]")]
    RiskOutOfRange { code: String, value: f64 },
    #[error("missing required column '{name}'")]
    MissingColumn { name: String },
}

impl DatasetError {
    fn malformed(line: u64, message: impl Into<String>) -> Self {
        DatasetError::MalformedRow {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn csv_error(err: csv::Error) -> DatasetError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        other => DatasetError::malformed(line, format!("{other:?}")),
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;
