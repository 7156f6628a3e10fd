use thiserror::Error;

/// Errors surfaced by sampling, construction and analysis routines.
///
/// Disconnection of a network is *not* an error (it is reported as an
/// infinite resistance value), and general-position degeneracies are
/// reported, not raised. Everything here is a genuine misuse or failure.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is out of its admissible range (nonpositive intensity,
    /// zero radius, bad variant tag, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Inputs that do not belong together (graph built over a different
    /// point set, vertex id out of range, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// Geometric construction cannot proceed (all points affinely
    /// degenerate, fewer than d+1 points, ...).
    #[error("construction error: {0}")]
    Construction(String),

    /// A requested index range leaves the trusted (trimmed) region.
    #[error("range error: {0}")]
    Range(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}
