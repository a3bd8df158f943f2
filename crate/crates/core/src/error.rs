use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("fractional order must be non-negative, got {0}")]
    NegativeOrder(f64),

    #[error("padded grid of {needed} points exceeds the budget of {budget}")]
    DealiasBudget { needed: usize, budget: usize },

    #[error("backward heat flow requested: t = {t} with eps = {eps}")]
    BackwardHeat { t: f64, eps: f64 },

    #[error("dispersion order must exceed 2, got {0}")]
    DispersionOrder(f64),

    #[error("correction index {index} outside 1..={depth}")]
    LadderIndex { index: usize, depth: usize },

    #[error("negative radicand {0} in modified energy")]
    NegativeRadicand(f64),

    #[error("Sobolev exponents ({s0}, {s1}, {s2}) violate the bilinear hypotheses")]
    BilinearHypothesis { s0: f64, s1: f64, s2: f64 },

    #[error("trajectory truncated by blowup at t = {t}")]
    Blowup { t: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> LabError {
    LabError::Parse {
        line,
        msg: msg.into(),
    }
}
