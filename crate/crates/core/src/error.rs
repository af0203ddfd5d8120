use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid rank profile: {0}")]
    InvalidRanks(String),

    #[error("split {split} out of range for a tensor of order {order}")]
    SplitOutOfRange { split: usize, order: usize },

    #[error("size mismatch: expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operator of dimension {op} cannot act on a tensor with {len} entries")]
    DimensionMismatch { op: usize, len: usize },

    /// The leading rows of a flattening are numerically dependent, so the
    /// point lies outside the chart where the identity-block gauge exists.
    #[error("leading {rank} rows singular at step {step} (condition number {cond:.3e})")]
    SingularLeadingRows { step: usize, rank: usize, cond: f64 },

    #[error("flattening {step} has numerical rank {found}, expected {expected}")]
    RankMismatch {
        step: usize,
        expected: usize,
        found: usize,
    },

    #[error("rank chain broken at core {core}: {detail}")]
    RankChain { core: usize, detail: String },

    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange {
        index: Vec<usize>,
        shape: Vec<usize>,
    },

    #[error("site {site} out of range for a train with {len} cores")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("zero core encountered at site {0}")]
    ZeroCore(usize),

    #[error("tensor is isotropic or zero (psi^T psi = {0:e})")]
    IsotropicOrZero(f64),

    #[error("environment at site {site} is not orthogonal (residual {residual:e})")]
    EnvironmentNotOrthogonal { site: usize, residual: f64 },

    #[error("site count {n} exceeds the dense assembly cap {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    #[error("unknown family: {0}")]
    UnknownFamily(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("no seed solution could be polished below the residual threshold")]
    NoSeed,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("integer overflow evaluating {0}")]
    Overflow(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
