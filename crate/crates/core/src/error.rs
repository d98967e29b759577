use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Cholesky failed; `minor` is the 1-based order of the first leading
    /// minor that is not positive.
    #[error("matrix is not positive definite: leading minor {minor} is not positive")]
    NotPositiveDefinite { minor: usize },
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },
    #[error("Q rank {rank} < m {m}")]
    RankDeficient { rank: usize, m: usize },
    #[error("invalid dataset: {}", join(.0))]
    InvalidDataset(Vec<DatasetIssue>),
    #[error("constant column `{0}` cannot be standardized")]
    ConstantColumn(String),
    #[error("graph contains a directed cycle: {}", cycle_string(.0))]
    Cycle(Vec<usize>),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("node {node}: posterior shape {shape} <= 1, the mean of psi is undefined")]
    UndefinedMean { node: usize, shape: f64 },
    #[error("non-positive posterior rate {0:e}")]
    NonPositiveRate(f64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl fmt::Display,
        got: impl fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

/// One violated dataset invariant, as reported by [`crate::model::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetIssue {
    NotEnoughSamples { n: usize, m: usize },
    RowMismatch { x_rows: usize, q_rows: usize },
    NonFinite { matrix: &'static str, row: usize, col: usize },
    RankDeficient { rank: usize, m: usize },
    NameCount { matrix: &'static str, expected: usize, got: usize },
}

impl fmt::Display for DatasetIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetIssue::NotEnoughSamples { n, m } => {
                write!(f, "n must exceed m (n = {n}, m = {m})")
            }
            DatasetIssue::RowMismatch { x_rows, q_rows } => {
                write!(f, "X has {x_rows} rows but Q has {q_rows}")
            }
            DatasetIssue::NonFinite { matrix, row, col } => {
                write!(f, "{matrix}[{row},{col}] is not finite")
            }
            DatasetIssue::RankDeficient { rank, m } => write!(f, "Q rank {rank} < m {m}"),
            DatasetIssue::NameCount {
                matrix,
                expected,
                got,
            } => write!(f, "{matrix} has {expected} columns but {got} names"),
        }
    }
}

fn join(issues: &[DatasetIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn cycle_string(cycle: &[usize]) -> String {
    cycle
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" -> ")
}
