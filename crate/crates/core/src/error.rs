use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("no device has a usable channel: {0}")]
    NoSignal(String),

    #[error("non-finite value in round {round}: {context}")]
    Numerical { round: usize, context: String },

    #[error("malformed {what} at byte offset {offset}: {reason}")]
    Format {
        what: String,
        offset: u64,
        reason: String,
    },

    #[error("budget admits no feasible configuration: {0}")]
    Budget(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("step size {beta} violates the admissible bound {supremum}")]
    StepSize { beta: f64, supremum: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category, also used to pick the CLI exit code.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Domain(_) => "domain",
            Error::NoSignal(_) => "no-signal",
            Error::Numerical { .. } => "numerical",
            Error::Format { .. } => "format",
            Error::Budget(_) => "budget",
            Error::NotApplicable(_) => "not-applicable",
            Error::StepSize { .. } => "step-size",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "format" => 4,
            "numerical" => 5,
            "budget" => 6,
            "not-applicable" | "step-size" => 7,
            _ => 8,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
