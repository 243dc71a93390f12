use std::fmt;

/// Errors shared across the solver and the consistency harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Stencil/grid/field dimensions or lengths do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Density became non-positive, so velocity is undefined.
    #[error("degenerate density {density:.3e} at node ({ix}, {iy}, {iz})")]
    DegenerateDensity {
        density: f64,
        ix: usize,
        iy: usize,
        iz: usize,
    },

    /// The field norm exceeded the blow-up guard during time stepping.
    #[error("field blow-up at step {step}: sup-norm {norm:.3e} exceeds {limit:.3e}")]
    BlowUp { step: u64, norm: f64, limit: f64 },

    /// A run would take an absurd number of steps.
    #[error("step budget exceeded: t_end/dt = {steps:.3e} steps (limit 1e9)")]
    StepBudget { steps: f64 },

    /// Configuration file problems, with 1-based line numbers where known.
    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A report file could not be parsed back.
    #[error("report parse error (line {line}): {msg}")]
    ReportParse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitStatus::Pass => write!(f, "PASS"),
            ExitStatus::ThresholdFail => write!(f, "FAIL"),
            ExitStatus::Unstable => write!(f, "UNSTABLE"),
        }
    }
}

/// Outcome of a study that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// All configured thresholds passed.
    Pass,
    /// The study completed but at least one threshold failed.
    ThresholdFail,
    /// Every configured resolution blew up; no thresholds could be judged.
    Unstable,
}

impl ExitStatus {
    /// Process exit code for the command-line driver: 0 pass, 1 threshold
    /// failure, 3 runtime blow-up (2 is reserved for config errors).
    pub fn code(&self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::ThresholdFail => 1,
            ExitStatus::Unstable => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
