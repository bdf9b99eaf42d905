use thiserror::Error;

use crate::dyadic::BinaryString;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("string {string} has length {length}, deeper than table depth {depth}")]
    Depth {
        string: BinaryString,
        length: usize,
        depth: usize,
    },
    #[error("estimator is undefined on the empty string")]
    UndefinedEstimator,
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("measure vanishes on prefix {prefix}")]
    Division { prefix: BinaryString },
    #[error("open set V_{index} has mass {mass}, not below 2^-{index}")]
    Construction { index: usize, mass: String },
    #[error("semimeasure has zero mass at the root")]
    EmptySemimeasure,
    #[error("program {0} is not in the transducer roster")]
    UnknownProgram(u64),
    #[error("no witness window found for n = {n} within budget ({reason})")]
    SearchExhausted { n: u64, reason: String },
    #[error("level {level} has mass {mass}, not above 1 - epsilon = {threshold}")]
    ScheduleInsufficient {
        level: usize,
        mass: String,
        threshold: String,
    },
    #[error("generators {0} and {1} are comparable")]
    ComparableGenerators(BinaryString, BinaryString),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn id(&self) -> &'static str {
        match self {
            Error::Depth { .. } => "depth",
            Error::UndefinedEstimator => "undefined-estimator",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::Division { .. } => "division",
            Error::Construction { .. } => "construction",
            Error::EmptySemimeasure => "empty-semimeasure",
            Error::UnknownProgram(_) => "unknown-program",
            Error::SearchExhausted { .. } => "search-exhausted",
            Error::ScheduleInsufficient { .. } => "schedule-insufficient",
            Error::ComparableGenerators(..) => "comparable-generators",
            Error::Parse { .. } => "parse",
        }
    }
}
