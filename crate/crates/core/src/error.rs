use thiserror::Error;

/// Errors raised by estimation, band construction and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bandwidth {0}: must be positive and finite")]
    InvalidBandwidth(f64),

    #[error("bandwidth {h} is not smaller than the band interval length {length}")]
    BandwidthExceedsInterval { h: f64, length: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate response: selection indicator has no {missing} values")]
    DegenerateResponse { missing: &'static str },

    #[error("quasi-complete separation: coefficient norm {norm:.3} exceeded {threshold}")]
    Separation { norm: f64, threshold: f64 },

    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    #[error("singular local window at x = {x}: {count} effective complete case(s)")]
    SingularWindow { x: f64, count: usize },

    #[error("density estimate {value} at x = {x} is not positive")]
    DensityFloor { x: f64, value: f64 },

    #[error("{failed} of {total} grid points failed; band is not constructible")]
    CoverageInfeasible { failed: usize, total: usize },

    #[error("{failed} of {total} replications failed")]
    ScenarioFailed { failed: usize, total: usize },

    #[error("probability {0} outside (0, 1)")]
    Domain(f64),

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
