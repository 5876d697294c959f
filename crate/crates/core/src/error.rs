use alloc::string::String;

/// Errors raised by the estimators, the optimizer and the interval engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unbalanced panel: unit `{unit}` has {found} of {expected} time points")]
    UnbalancedPanel {
        unit: String,
        found: usize,
        expected: usize,
    },
    #[error("duplicate observation for unit `{unit}` at time `{time}`")]
    DuplicateCell { unit: String, time: String },
    #[error("panel too small: need N >= 2 and T >= 2, got N = {n}, T = {t}")]
    PanelTooSmall { n: usize, t: usize },
    #[error("non-finite value in column `{column}`")]
    NonFiniteValue { column: &'static str },
    #[error("missing value in column `{column}` for unit `{unit}`")]
    MissingValue { column: &'static str, unit: String },
    #[error("panel has no response column")]
    MissingResponse,
    #[error("degenerate design: {0}")]
    DegenerateDesign(&'static str),
    #[error("residual variance estimate is zero")]
    ZeroResidualVariance,
    #[error("rho = 0 has no finite delta")]
    NoFiniteSolution,
    #[error("non-finite knot value")]
    NonFiniteKnot,
    #[error("even knot {index} is negative ({value})")]
    NegativeEvenKnot { index: usize, value: f64 },
    #[error("non-finite quadrature integrand at psi = {psi}")]
    QuadratureFailure { psi: f64 },
    #[error("optimizer failed at rho = {rho}: constraint violation {violation:e}")]
    OptimizerFailure { rho: f64, violation: f64 },
    #[error("grid does not match design: {0}")]
    GridMismatch(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnbalancedPanel { .. } => "UNBALANCED_PANEL",
            Error::DuplicateCell { .. } => "DUPLICATE_CELL",
            Error::PanelTooSmall { .. } => "PANEL_TOO_SMALL",
            Error::NonFiniteValue { .. } => "NON_FINITE_VALUE",
            Error::MissingValue { .. } => "MISSING_VALUE",
            Error::MissingResponse => "MISSING_RESPONSE",
            Error::DegenerateDesign(_) => "DEGENERATE_DESIGN",
            Error::ZeroResidualVariance => "ZERO_RESIDUAL_VARIANCE",
            Error::NoFiniteSolution => "NO_FINITE_SOLUTION",
            Error::NonFiniteKnot => "NON_FINITE_KNOT",
            Error::NegativeEvenKnot { .. } => "NEGATIVE_EVEN_KNOT",
            Error::QuadratureFailure { .. } => "QUADRATURE_FAILURE",
            Error::OptimizerFailure { .. } => "OPTIMIZER_FAILURE",
            Error::GridMismatch(_) => "GRID_MISMATCH",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}
