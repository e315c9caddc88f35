use thiserror::Error;

use crate::report::Condition;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("conditioning event has zero probability")]
    ZeroConditioningEvent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a unit vector: ({x}, {y}, {z}) has norm² {norm_sq}")]
    NotUnit { x: f64, y: f64, z: f64, norm_sq: f64 },

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("hidden state {point} does not belong to λ-space {space}")]
    LambdaMismatch { point: String, space: String },

    #[error("setting ({x}, {y}, {z}) is not in the theory's setting set")]
    UnknownSetting { x: f64, y: f64, z: f64 },

    #[error("partition cell `{0}` has zero weight")]
    EmptyCell(String),

    #[error("partition is not a partition of the support: {0}")]
    InvalidPartition(String),

    #[error("{0} was evaluated on zero well-defined grid points")]
    DegenerateGrid(Condition),

    #[error("λ-ensembles cannot be compared across settings: {0}")]
    IncomparableEnsembles(String),

    #[error("{what} needs {needed} evaluations, cap is {cap}")]
    ResourceLimit { what: String, needed: u128, cap: u128 },

    #[error("no trials match setting pair ({a_index}, {b_index})")]
    NoMatchingTrials { a_index: usize, b_index: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
}
