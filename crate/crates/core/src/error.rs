use thiserror::Error;

/// Errors raised by the simulation, estimation and study machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension { what: &'static str, expected: usize, got: usize },

    #[error("simulation index h={h} outside 1..={count}")]
    SeedIndex { h: u64, count: u64 },

    #[error("not enough {class} responses to flip: need {needed}, have {available}")]
    Contamination { class: &'static str, needed: usize, available: usize },

    #[error("singular or rank-deficient matrix: {0}")]
    Singular(String),

    #[error("non-finite value in coordinate {coord} of {what}")]
    NonFinite { what: &'static str, coord: usize },

    #[error("no overdispersion detected (moment denominator {denominator:.6e} <= 0)")]
    NoOverdispersion { denominator: f64 },

    #[error("all responses are zero; dispersion is not identifiable")]
    AllZero,

    #[error("all {0} inner fits failed")]
    AllFitsFailed(usize),

    #[error("too few usable iterations for a rate estimate: {0}")]
    TooFewIterations(usize),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("study aborted: {failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
