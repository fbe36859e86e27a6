use thiserror::Error;

use crate::inference::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptySample: the sample contains no observations")]
    EmptySample,

    #[error("NegativeDatum: observation {index} = {value} is not positive (half-line support)")]
    NegativeDatum { index: usize, value: f64 },

    #[error("NonPositiveScale: initial scale must be > 0, got {0}")]
    NonPositiveScale(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SingularLeadingCoefficient: coefficient theta_{order} is zero")]
    SingularLeadingCoefficient { order: usize },

    #[error("OutsideDomain: {0}")]
    OutsideDomain(String),

    #[error("PathSingularity: leading coefficient vanishes along the segment")]
    PathSingularity,

    #[error("OdeDivergence: {0}")]
    OdeDivergence(String),

    #[error("AxisOutsideDomain: the {axis}-axis restriction is not an interior parameter")]
    AxisOutsideDomain { axis: char },

    #[error("SingularSystem: |det P| = {det:e} is below the singularity threshold")]
    SingularSystem { det: f64 },

    #[error("InconsistentExtension: least-squares residual {residual:e} at order {order}")]
    InconsistentExtension { order: usize, residual: f64 },

    #[error("PathCrossesSingularity: det P vanishes or the discriminant changes sign at s = {s}")]
    PathCrossesSingularity { s: f64 },

    #[error("ZeroPolynomial")]
    ZeroPolynomial,

    #[error("LeadingCoefficientZero")]
    LeadingCoefficientZero,

    #[error("NonSquarefree: the Sturm sequence degenerated (multiple root)")]
    NonSquarefree,

    #[error("OnDiscriminant: |D| = {0:e} is within tolerance of zero")]
    OnDiscriminant(f64),

    #[error("DivergentIntegral: the integrand does not decay")]
    DivergentIntegral,

    #[error("ToleranceNotMet: estimated error {estimate:e} exceeds requested {requested:e}")]
    ToleranceNotMet { estimate: f64, requested: f64 },

    #[error("UnsupportedOrder: {0}")]
    UnsupportedOrder(String),

    #[error("NotConverged after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),

    #[error("BoundaryEscape: the likelihood is maximised on the boundary of the parameter space")]
    BoundaryEscape(Box<FitResult>),

    #[error("SingularInformation: the Fisher information is not positive definite")]
    SingularInformation,
}

impl Error {
    /// Partial fit attached to optimizer failures.
    pub fn partial_fit(&self) -> Option<&FitResult> {
        match self {
            Error::NotConverged(fit) | Error::BoundaryEscape(fit) => Some(fit),
            _ => None,
        }
    }
}
