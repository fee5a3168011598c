use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "envelope [{lo:.2}, {hi:.2}] ns exceeds grid [{grid_lo:.2}, {grid_hi:.2}] ns (short by {margin:.2} ns)"
    )]
    EnvelopeExceedsGrid {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
        margin: f64,
    },

    #[error("wave packets live on different time grids")]
    GridMismatch,

    #[error("wave packet `{label}` is not normalized (norm {norm})")]
    NotNormalized { label: String, norm: f64 },

    #[error("region selects no probability mass")]
    EmptyRegion,

    #[error("density has zero total mass")]
    DegenerateDensity,

    #[error("no reference coincidences in the outer peaks")]
    EmptyReference,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Configuration problems map to exit code 2, everything else to 3.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
