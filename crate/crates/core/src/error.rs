use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FhsError {
    #[error("body is unbounded in the requested direction or operation")]
    UnboundedBody,
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("mesh resolution too coarse: {elements} elements (need at least 8)")]
    ResolutionTooCoarse { elements: usize },
    #[error("degenerate element normal on element {element}: |nu| = {norm}")]
    NormalDegenerate { element: usize, norm: f64 },
    #[error("degenerate mesh: centroids of elements {0} and {1} coincide")]
    DegenerateMesh(usize, usize),
    #[error("beta = {beta} outside [0, n) for n = {n}")]
    BetaOutOfRange { n: usize, beta: f64 },
    #[error("alpha of curvature field ({field}) does not match parameters ({params})")]
    AlphaMismatch { field: f64, params: f64 },
    #[error("negative fractional curvature {value} on element {element} (max {max})")]
    NegativeCurvature { element: usize, value: f64, max: f64 },
    #[error("volume-form curvature did not converge: {coarse} vs {fine}")]
    NumericalNonconvergence { coarse: f64, fine: f64 },
    #[error("field takes negative value {0}")]
    NonnegativityViolation(f64),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("series did not converge")]
    DivergentSeries,
    #[error("exponents t1 + t2 = {0} < 1")]
    ExponentViolation(f64),
    #[error("Hoelder exponent {alpha_exp} must exceed tau = {tau}")]
    ExponentOrder { alpha_exp: f64, tau: f64 },
    #[error("zero denominator: field vanishes identically")]
    ZeroDenominator,
    #[error("balance forces 1/tau = {0} <= 0")]
    NonpositiveTau(f64),
    #[error("inconsistent parameters: {0}")]
    InconsistentParams(String),
    #[error("parameters are not admissible: {0}")]
    InadmissibleParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no Hoelder split found after {halvings} halvings (last delta {delta:e})")]
    SplitNotFound { halvings: usize, delta: f64 },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("field support reaches within 4h of the patch edge")]
    SupportTooLarge,
    #[error("cannot normalize: {0}")]
    DegenerateScaling(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FhsError {
    fn from(e: std::io::Error) -> Self {
        FhsError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FhsError>;
