use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("content library must hold at least one content")]
    InvalidLibrary,

    #[error("content rank {rank} outside 1..={size}")]
    InvalidRank { rank: usize, size: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel integral diverges for path-loss exponent {alpha} (requires alpha > 2)")]
    DivergentIntegral { alpha: f64 },

    #[error("content unreachable from the small-cell tier (beta * P_c = 0)")]
    ContentUnreachable,

    #[error("degenerate network: {0}")]
    DegenerateNetwork(&'static str),

    #[error("distance {r} outside [0, {max}]")]
    Domain { r: f64, max: f64 },

    #[error("{what} evaluated to {value}, outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("quadrature failed to reach tolerance: estimate {value}, error {abs_error} after {intervals} intervals")]
    Quadrature {
        value: f64,
        abs_error: f64,
        intervals: usize,
    },

    #[error("{}", config_message(.key, .line, .message))]
    Config {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn config_message(key: &Option<String>, line: &Option<usize>, message: &str) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!("line {l}: key `{k}`: {message}"),
        (Some(k), None) => format!("key `{k}`: {message}"),
        (None, Some(l)) => format!("line {l}: {message}"),
        (None, None) => message.to_string(),
    }
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: Some(key.into()),
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// a failure while computing.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParameter { .. }
                | Error::InvalidLibrary
                | Error::InvalidRank { .. }
                | Error::DivergentIntegral { .. }
        )
    }
}
