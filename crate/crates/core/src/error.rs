use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid preference profile: {0}")]
    InvalidProfile(String),

    #[error("invalid scoring rule: {0}")]
    InvalidRule(String),

    #[error("position {position} outside 1..={candidates}")]
    PositionOutOfRange { position: usize, candidates: usize },

    #[error("threshold {0} outside (0, 1]")]
    ThresholdOutOfRange(f64),

    #[error("invalid control instance: {0}")]
    InvalidInstance(String),

    #[error("live-edge graph does not match its source graph at node {0}")]
    InconsistentLiveEdge(usize),

    #[error("enumeration needs {count} live-edge graphs, limit is {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("operation requires a constructive instance")]
    NotConstructive,

    #[error("budget {budget} exceeds node count {nodes}")]
    BudgetTooLarge { budget: usize, nodes: usize },

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
