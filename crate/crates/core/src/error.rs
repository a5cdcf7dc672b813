use thiserror::Error;

use crate::rat::Rat;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed curve description (ordering, monotonicity, periodicity).
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("negative abscissa {0}")]
    NegativeAbscissa(Rat),

    /// Lower pseudo-inverse of a bounded function.
    #[error("inverse diverges: curve is bounded")]
    InverseDiverges,

    #[error("inner function of a composition must be continuous (jump at {0})")]
    DiscontinuousInner(Rat),

    #[error("horizontal deviation is unbounded")]
    Unbounded,

    #[error("empty curve list")]
    EmptyList,

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("flow index {index} out of range for {flows} flows")]
    FlowIndex { index: usize, flows: usize },

    #[error("phi needs two distinct flows, got i = j = {0}")]
    SameFlow(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("busy-period violation: system idle at {0} before the horizon")]
    BusyPeriodViolation(Rat),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// `true` for math-domain failures, as opposed to malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InverseDiverges
                | Error::DiscontinuousInner(_)
                | Error::Unbounded
                | Error::BusyPeriodViolation(_)
                | Error::Precondition(_)
        )
    }
}
