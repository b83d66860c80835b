use thiserror::Error;

/// Errors surfaced by the measure, coupling and metric layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point `{0}` is not registered in the ground space")]
    UnknownPoint(String),

    #[error("duplicate point id `{0}`")]
    DuplicatePoint(String),

    #[error("ground space has no points")]
    EmptySpace,

    #[error("distance matrix must be {n}x{n}, got row of length {got}")]
    MatrixShape { n: usize, got: usize },

    #[error("point `{id}` has {got} coordinates, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("ground space failed metric validation:\n{0}")]
    InvalidMetric(crate::space::ValidationReport),

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("all atom weights are bottom")]
    AllBottom,

    #[error("atom weight at `{point}` is not finite: {weight}")]
    InvalidWeight { point: String, weight: f64 },

    #[error("measure is not normalized: top weight {max_weight} is more than {tol} from 0")]
    NotNormalized { max_weight: f64, tol: f64 },

    #[error("test function is undefined at support point `{0}`")]
    UndefinedAt(String),

    #[error("point map is undefined at support point `{0}`")]
    UnmappedPoint(String),

    #[error("measures live on different ground spaces")]
    SpaceMismatch,

    #[error("couplings do not share their middle measure")]
    MiddleMeasureMismatch,

    #[error("coupling entry ({j},{k}) is outside the {n1}x{n2} atom grid")]
    EntryOutOfRange {
        j: usize,
        k: usize,
        n1: usize,
        n2: usize,
    },

    #[error("coupling weight gamma({j},{k}) = {gamma} exceeds the bound min(lambda1, lambda2) = {bound}")]
    GammaBound {
        j: usize,
        k: usize,
        gamma: f64,
        bound: f64,
    },

    #[error("{pairs} candidate pairs exceed the exhaustive-search guard of {guard}")]
    SizeGuard { pairs: usize, guard: usize },

    #[error("scalar value must be finite or -inf, got {0}")]
    NonFiniteScalar(f64),

    #[error("dequantization parameter h must be positive, got {0}")]
    NonpositiveH(f64),

    #[error("dequantization arguments must be finite")]
    NonFiniteDequantization,

    #[error("measure sequence is empty")]
    EmptySequence,

    #[error("tail length {tail} exceeds sequence length {len}")]
    TailTooLong { tail: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
