use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Every variant has a stable name (see
/// [`Error::name`]) that the command-line front end reports verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("frequencies must be positive (got {0})")]
    NonPositiveFrequency(f64),

    #[error("density-matrix parameters are not integrable: {0}")]
    NonIntegrableParams(String),

    #[error("state is not physical: {0}")]
    NonPhysicalState(String),

    #[error("parameter-to-covariance map is singular")]
    SingularParameterMap,

    #[error("bipartite parameter form requires zero means")]
    NonZeroMeans,

    #[error("coefficient matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetricB(f64),

    #[error("frame is not symplectic (residual {0:e})")]
    NonSymplecticFrame(f64),

    #[error("closed-form denominator vanishes")]
    SingularDenominator,

    #[error("adaptive step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("propagator evaluated at a caustic (|lambda4| = {0:e})")]
    CausticSingularity(f64),

    #[error("scale constant C = {0} does not give a physical state")]
    UnphysicalC(f64),

    #[error("omega1 must be nonzero")]
    ZeroOmega1,

    #[error("tomographic frame (mu, nu) = (0, 0) is degenerate")]
    DegenerateFrame,

    #[error("quadrature did not converge: orders disagree by {0:e}")]
    QuadratureNotConverged(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonPositiveFrequency(_) => "NonPositiveFrequency",
            Error::NonIntegrableParams(_) => "NonIntegrableParams",
            Error::NonPhysicalState(_) => "NonPhysicalState",
            Error::SingularParameterMap => "SingularParameterMap",
            Error::NonZeroMeans => "NonZeroMeans",
            Error::NonSymmetricB(_) => "NonSymmetricB",
            Error::NonSymplecticFrame(_) => "NonSymplecticFrame",
            Error::SingularDenominator => "SingularDenominator",
            Error::StepSizeUnderflow(_) => "StepSizeUnderflow",
            Error::CausticSingularity(_) => "CausticSingularity",
            Error::UnphysicalC(_) => "UnphysicalC",
            Error::ZeroOmega1 => "ZeroOmega1",
            Error::DegenerateFrame => "DegenerateFrame",
            Error::QuadratureNotConverged(_) => "QuadratureNotConverged",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
