use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable arity mismatch: {left:?} vs {right:?}")]
    ArityMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("series is not a unit: constant term vanishes")]
    NotAUnit,

    #[error("matrix is singular at the series origin")]
    SingularMatrix,

    #[error("coefficient of u^{needed} requested but expansion is only known through u^{available}")]
    CapExceeded { needed: i32, available: i32 },

    #[error("Laurent expansion is not known to be finite per monomial: {0}")]
    IncompleteLaurent(String),

    #[error("q = 1 is a pole of the S-matrix")]
    PoleAtOne,

    #[error("quantum product is not semisimple: {0}")]
    NotSemisimple(String),

    #[error("incompatible system at order {order}: mixed partials disagree ({detail})")]
    IncompatibleSystem { order: usize, detail: String },

    #[error("model schema error: {0}")]
    Schema(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("string-equation oracle cannot reduce correlator {0}")]
    OracleIncomplete(String),

    #[error("numerical blow-up detected at t = {t}")]
    BlowupDetected { t: f64 },

    #[error("coordinate change has non-invertible linear part")]
    NonInvertibleLinearPart,

    #[error("expected a jet-free density")]
    JetsNotAllowed,

    #[error("sample point ({q1}, {q2}) lies on the singular locus")]
    SingularSample { q1: String, q2: String },

    #[error("order {requested} exceeds the solved S-matrix (have {available})")]
    OrderExceedsSolved { requested: usize, available: usize },

    #[error("fixed-point iteration did not stabilize after {iterations} steps")]
    NotStabilized { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
