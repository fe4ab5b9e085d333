use crate::twin::TwinRunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A time step produced NaN or Inf. Carries the simulation time of the
    /// failed step and, when raised from a twin run, the partial record.
    #[error("numerical blow-up at t = {time}")]
    BlowUp {
        time: f64,
        partial: Option<Box<TwinRunRecord>>,
    },

    #[error("config error: key `{key}`{}: {reason}", fmt_line(*.line))]
    Config {
        key: String,
        line: Option<usize>,
        reason: String,
    },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("no plateau reached: {0}")]
    NoPlateau(String),

    #[error("sweep precondition violated: {0}")]
    SweepPrecondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, line: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            line,
            reason: reason.into(),
        }
    }
}
