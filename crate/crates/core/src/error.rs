use thiserror::Error;

/// Why an expression could not be evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalErrorKind {
    #[error("logarithm of a non-positive argument")]
    LogNonPositive,
    #[error("square root of a negative argument")]
    SqrtNegative,
    #[error("division by zero")]
    DivisionByZero,
    #[error("fractional power of a negative base")]
    PowNegativeBase,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{name}` out of range for dimension {dim}")]
    VariableOutOfRange { name: String, dim: usize },
    #[error("exponent at byte {offset} is not a constant")]
    NonConstantExponent { offset: usize },
    #[error("{kind} in subexpression `{subtree}`")]
    Eval { kind: EvalErrorKind, subtree: String },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("Hessian is not positive definite at the point")]
    NotConvexAtPoint,
    #[error("the two vectors span a degenerate plane")]
    DegeneratePlane,
    #[error("exponent must be nonzero")]
    ZeroExponent,
    #[error("dimension {0} is not supported here (need n >= 2)")]
    BadDimension(usize),
    #[error("cubic form vanishes at the point")]
    VanishingPick,
    #[error("dimension {0} is not supported by the brute-force search (n must be 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("parameters outside the parametrization domain: {0}")]
    ParameterDomain(String),
    #[error("geodesic left the domain at s = {s}")]
    LeftDomain {
        s: f64,
        path: Box<crate::geodesics::GeodesicPath>,
    },
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("affine map is singular")]
    SingularTransform,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::VariableOutOfRange { .. }
                | Error::NonConstantExponent { .. }
                | Error::DimensionMismatch { .. }
                | Error::ZeroExponent
                | Error::BadDimension(_)
                | Error::UnsupportedDimension(_)
                | Error::UnknownCatalogEntry(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
