use thiserror::Error;

/// A single row-addressed problem found while parsing a delimited file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid roster: {0}")]
    InvalidRoster(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid turn sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid conversation state: {0}")]
    InvalidState(String),

    #[error("memory gap must be at least 1 turn")]
    ZeroGap,

    #[error("member {speaker} spoke on the previous turn and cannot speak again")]
    RepeatedSpeaker { speaker: usize },

    #[error("speaking likelihoods sum to zero")]
    DegenerateDistribution,

    #[error("observed speaker at turn {turn} has probability zero under the model")]
    ImpossibleHistory { turn: u64 },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perfect fit (residual sum of squares {0:e}); log-likelihood is unbounded")]
    PerfectFit(f64),

    #[error("{} malformed row(s): {}", .0.len(), join_rows(.0))]
    Rows(Vec<RowError>),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_rows(rows: &[RowError]) -> String {
    rows.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
