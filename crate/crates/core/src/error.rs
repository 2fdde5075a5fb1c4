use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A level index in a coupling, source channel or query is outside `0..n_levels`.
    #[error("{what}: level {level} is out of range for a {n_levels}-level system")]
    LevelOutOfRange {
        what: String,
        level: usize,
        n_levels: usize,
    },

    #[error("harmonic {harmonic} is out of range for truncation order {order}")]
    HarmonicOutOfRange { harmonic: i32, order: usize },

    #[error("position {position} is out of range for an unknown vector of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Outflow encoded in the diagonal linewidths does not match the source influx.
    #[error("system is not closed: level {level} loses {defect:e} rad/s more than it returns")]
    OpenSystem { level: usize, defect: f64 },

    #[error("reduced matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("reduced matrix is ill-conditioned: estimated condition number {condition:e} exceeds {threshold:e}")]
    IllConditioned { condition: f64, threshold: f64 },

    #[error("integration produced non-finite values at t = {time:e} s; reduce the time step")]
    Unstable { time: f64 },

    #[error("trajectory has not settled: period-to-period drift {drift:e} after {duration:e} s")]
    NotSettled { drift: f64, duration: f64 },

    #[error("dipole table line {line}: {message}")]
    DipoleTableParse { line: usize, message: String },

    #[error("dipole table has no entry for allowed transition {transition}")]
    MissingDipole { transition: String },

    #[error("dipole table: {0}")]
    DipoleTable(String),

    #[error("{failed} of {total} sweep points failed (first failure: {first})")]
    SweepFailed {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("failed to write output: {0}")]
    Output(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Output(err.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Output(err.to_string())
    }
}
