use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed event log: {0}")]
    MalformedLog(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("user index {index} out of range for {n} users")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("time reversal: requested t={requested} before as_of={as_of}")]
    TimeReversal { requested: f64, as_of: f64 },

    #[error("time {t} outside horizon [{t0}, {tf}]")]
    OutsideHorizon { t: f64, t0: f64, tf: f64 },

    #[error("thinning bound violated at t={t}: intensity {intensity} > bound {bound}")]
    InvalidBound { t: f64, intensity: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver diverged at t={t}: {reason}")]
    SolverDivergence { t: f64, reason: String },

    #[error(
        "budget calibration failed: target {target} not bracketed \
         (estimate {low_estimate} at multiplier {low_multiplier}, \
         {high_estimate} at multiplier {high_multiplier})"
    )]
    CalibrationFailure { target: f64, low_multiplier: f64, low_estimate: f64, high_multiplier: f64, high_estimate: f64 },

    #[error("infeasible model: event at t={t} for user {user} has zero intensity")]
    InfeasibleModel { t: f64, user: usize },

    #[error("degenerate scores: all scores are zero")]
    DegenerateScores,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error belongs to the solver / calibration family, as opposed
    /// to bad input or configuration.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SolverDivergence { .. } | Error::CalibrationFailure { .. })
    }
}
