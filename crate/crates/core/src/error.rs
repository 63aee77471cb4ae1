//! Error types shared across the crate.

use thiserror::Error;

/// Unified error type for data ingestion, geometry, solving, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A row or document could not be parsed under the declared format.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A required column or key is missing from the input.
    #[error("schema error: missing required column `{column}`")]
    Schema { column: String },

    /// A value parsed correctly but violates a domain invariant.
    #[error("domain error at line {line}: {reason}")]
    Domain { line: usize, reason: String },

    /// Some label class has zero samples, so label-conditional quantities
    /// are undefined and the loss objective is ill-posed.
    #[error("degenerate data: label {label} has no samples")]
    DegenerateLabel { label: u8 },

    /// A group lacks positive or negative samples, so one of its
    /// conditional rates (TPR or FPR) is undefined.
    #[error("degenerate group `{group}`: no samples with label {missing_label}")]
    DegenerateGroup { group: String, missing_label: u8 },

    /// A point handed to `decompose` is not inside the hull.
    #[error("point ({}, {}) lies outside the convex hull", .point.0, .point.1)]
    OutsideHull { point: (f64, f64) },

    /// A group was referenced that the policy or dataset does not know.
    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    /// Candidate models disagree on the shared (label, group) rows.
    #[error("mismatched rows at index {row}: {reason}")]
    MismatchedRows { row: usize, reason: String },

    /// The linear-programming backend failed numerically.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
