use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position-bearing netlist syntax error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based column of the offending token (or end of line).
    pub column: usize,
    /// The offending token, empty at end of line.
    pub token: String,
    /// What the parser would have accepted here.
    pub expected: Vec<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.token.is_empty() {
            write!(f, " (found '{}')", self.token)?;
        }
        if !self.expected.is_empty() {
            write!(f, "; expected {}", self.expected.join(" | "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("duplicate element name '{0}'")]
    DuplicateName(String),

    #[error("node '{0}' is referenced only by a directive")]
    UnknownNode(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("node '{0}' has no DC path to ground and no capacitor")]
    SingularStructure(String),

    #[error("Newton iteration did not converge at t = {time:e} s")]
    NewtonDivergence { time: f64 },

    #[error("no self-consistent PTM state assignment exists for this bias")]
    NoConsistentState,

    #[error("PTM states did not reach a fixed point within the iteration budget")]
    StateChatter,

    #[error("transient step failed at t = {time:e} s (dt reached dt_min)")]
    StepFailure { time: f64 },

    #[error("root bracket failure: {0}")]
    BracketFailure(String),

    #[error("{0} is not reachable within the bias range")]
    NotReachable(String),

    #[error("current {current:e} A is out of range for the diode-connected device")]
    OutOfRange { current: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("output never crosses 50% of the rail")]
    NoCrossing,

    #[error("every Monte Carlo sample failed")]
    AllSamplesFailed,

    #[error("at sweep value {value}: {source}")]
    Sweep { value: f64, source: Box<Error> },

    #[error("unknown source '{0}'")]
    UnknownSource(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors raised by the numerical engine rather than by malformed input.
    pub fn is_solver_error(&self) -> bool {
        if let Error::Sweep { source, .. } = self {
            return source.is_solver_error();
        }
        matches!(
            self,
            Error::NewtonDivergence { .. }
                | Error::NoConsistentState
                | Error::StateChatter
                | Error::StepFailure { .. }
                | Error::BracketFailure(_)
                | Error::SingularStructure(_)
                | Error::NotReachable(_)
                | Error::OutOfRange { .. }
                | Error::NoCrossing
                | Error::AllSamplesFailed
        )
    }
}
