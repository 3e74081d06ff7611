use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arm {arm} out of range for {num_arms} arms")]
    InvalidArm { arm: usize, num_arms: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("exact independence number requested for {num_arms} arms, above the cap of {cap}")]
    CapExceeded { num_arms: usize, cap: usize },

    #[error("arm {arm} has no in-neighbor, graph is not observable")]
    NotObservable { arm: usize },

    #[error("truncation {epsilon} exceeds budget/arms = {limit}: truncated polytope is empty")]
    EmptyPolytope { epsilon: f64, limit: f64 },

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("point is not in the decision polytope: {0}")]
    InfeasiblePoint(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no exchange pair between vertices (decision set lacks the exchange property)")]
    ExchangeFailure,

    #[error("bad clique partition: {0}")]
    BadPartition(String),

    #[error("arm {arm} has zero in-neighbor mass")]
    DenominatorZero { arm: usize },

    #[error("degenerate tuning: budget equals number of arms ({0}), the decision set is a singleton")]
    DegenerateTuning(usize),

    #[error("active decision set became empty")]
    EmptyActive,

    #[error("bad shape: {0}")]
    BadShape(String),

    #[error("budget {budget} exceeds the {available} available arms")]
    BudgetExceeded { budget: usize, available: usize },

    #[error("reward sequence exhausted at round {round} (length {len})")]
    ExhaustedSequence { round: usize, len: usize },

    #[error("invalid reward: {0}")]
    InvalidReward(String),

    #[error("policy read reward of arm {arm}, which is outside the observed neighborhood")]
    UnobservedRead { arm: usize },

    #[error("clique alignment broken at round {round}")]
    AlignmentBroken { round: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
