use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("angle mismatch: {0} vs {1}")]
    ThetaMismatch(f64, f64),
    #[error("window too small: {0}")]
    Window(String),
    #[error("shift {requested} is not on the grid; nearest admissible value is {nearest}")]
    OffGrid { requested: f64, nearest: f64 },
    #[error("grid is not commensurate: {0}")]
    Incommensurate(String),
    #[error("t = {t} is beyond the leakage horizon; largest admissible t is {t_max}")]
    Leakage { t: f64, t_max: f64 },
    #[error("eigensolver failed (omega = {omega}, N = {n})")]
    Eigen { omega: f64, n: usize },
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("oscillator basis completeness defect {0:.3e} exceeds 1%")]
    Completeness(f64),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
