use thiserror::Error;

use crate::scalar::ScalarError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scalar(#[from] ScalarError),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("machine index {index} out of range for {m} machines")]
    MachineOutOfRange { index: usize, m: usize },

    #[error("job {job} cannot be assigned to machine {machine}: infinite processing time")]
    InfiniteAssignment { job: usize, machine: usize },

    #[error("scripted tie policy exhausted")]
    ScriptExhausted,

    #[error("tie policy chose machine {chosen}, which is not in the tie set {tied:?}")]
    BadTieChoice { chosen: usize, tied: Vec<usize> },

    #[error("scheme {scheme} does not support the {model} machine model")]
    Unsupported { scheme: String, model: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),

    #[error("search budget exceeded: {states} states > budget {budget}; use the lower bound instead")]
    BudgetExceeded { states: f64, budget: u64 },

    #[error("trace does not match instance: {0}")]
    TraceMismatch(String),

    #[error("cannot scale instance: {0}")]
    DegenerateScaling(String),

    #[error("flattening impossible: {0}")]
    Flatten(String),

    #[error("adversary gave up after {0} jobs without completing the requested phases")]
    AdversaryStalled(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
