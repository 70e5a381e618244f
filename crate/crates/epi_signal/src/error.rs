use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate state: total population is zero")]
    ZeroPopulation,
    #[error("integration diverged: non-finite state")]
    Diverged,
    #[error("control reproduction number undefined: psi + mu = 0")]
    DegenerateRc,
    #[error("herd-immunity threshold undefined: denominator is zero")]
    DegenerateThreshold,
    #[error("softmax undefined: every feasible message scores -inf")]
    DegenerateSoftmax,
    #[error("message {0} has zero marginal probability")]
    UndefinedMessage(usize),
    #[error("pooled message has zero marginal probability")]
    DegenerateMarginal,
    #[error("no interior fixed point in (0, 1)")]
    NoInteriorSolution,
    #[error("window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("invalid filter parameters: {0}")]
    BadFilter(String),
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 for configuration, 4 for I/O, 3 for everything
    /// that fails while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse(_) => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
