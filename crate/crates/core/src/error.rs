use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The product of all sin² factors in the unit cell is numerically 1,
    /// i.e. the chart of the variational manifold degenerates.
    #[error("singular unit cell: |1 - Pi| = {residual:e}")]
    SingularCell { residual: f64 },

    #[error("no return to the initial point found (closest approach {closest:e})")]
    NoReturnFound { closest: f64 },

    #[error("time step {dt} does not tile the eighth-period {eighth}")]
    IncommensurateStep { dt: f64, eighth: f64 },

    #[error("eigenvalue solver failed to converge")]
    EigFailure,

    #[error("coordinate transform is singular at ({theta1}, {theta2})")]
    SingularPoint { theta1: f64, theta2: f64 },

    #[error("proposal density {value} exceeded the sampling envelope {envelope}")]
    EnvelopeTooSmall { value: f64, envelope: f64 },

    #[error("basis for {n_sites} sites exceeds the configured cap of {cap} states")]
    TooLarge { n_sites: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("propagator failed to converge at t = {time} (residual {residual:e})")]
    ConvergenceFailure { time: f64, residual: f64 },

    #[error("singular value decomposition failed")]
    SvdFailure,

    #[error("need at least {needed} peaks for an envelope fit, found {found}")]
    InsufficientPeaks { needed: usize, found: usize },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("missing input: {}", .0.join(", "))]
    MissingInput(Vec<String>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Validation failures are the caller's fault; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::MissingInput(_)
                | Error::DomainError(_)
                | Error::DimensionMismatch { .. }
                | Error::TooLarge { .. }
                | Error::IncommensurateStep { .. }
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularCell { .. } => "SingularCell",
            Error::NoReturnFound { .. } => "NoReturnFound",
            Error::IncommensurateStep { .. } => "IncommensurateStep",
            Error::EigFailure => "EigFailure",
            Error::SingularPoint { .. } => "SingularPoint",
            Error::EnvelopeTooSmall { .. } => "EnvelopeTooSmall",
            Error::TooLarge { .. } => "TooLarge",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::SvdFailure => "SvdFailure",
            Error::InsufficientPeaks { .. } => "InsufficientPeaks",
            Error::DomainError(_) => "DomainError",
            Error::MissingInput(_) => "MissingInput",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
