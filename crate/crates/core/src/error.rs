use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("division by a zero tail value")]
    ZeroDenominator,
    #[error("no p in (0,1) attains the target tail value {0}")]
    NoSolution(String),
    #[error("no integer r in [0, {limit}) admits a tail solution")]
    NoFeasibleR { limit: u64 },
    #[error("support of {requested} grid points exceeds the cap of {cap}")]
    SupportCapExceeded { requested: u128, cap: u128 },
    #[error("distribution of Y is not symmetric about the origin")]
    AsymmetricY,
    #[error("margin {margin:e} at {context} is below the certified error bound {error:e}")]
    PrecisionInsufficient {
        context: String,
        margin: f64,
        error: f64,
    },
    #[error("level {level} out of range for bit depth {b}")]
    LevelOutOfRange { level: u64, b: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("space of {size} elements exceeds the enumeration cap of {cap}")]
    SpaceTooLarge { size: String, cap: u128 },
    #[error("malformed input at {position}: {message}")]
    MalformedInput { position: String, message: String },
    #[error("coordinate {index} = {value} is outside [0, 1]")]
    CoordinateOutOfRange { index: usize, value: f64 },
    #[error("subset of size {size} exceeds half of the {total} vertices")]
    NotInterestingSubset { size: u64, total: u64 },
    #[error("analytic mode is unavailable for this classifier")]
    AnalyticUnavailable,
    #[error("perturbation ball exceeds the enumeration cap of {cap}")]
    BallTooLarge { cap: u128 },
    #[error("class {0} is empty")]
    EmptyClass(u32),
    #[error("no image of a different class exists")]
    NoOtherClass,
    #[error("bit depth {0} is too large for exact enumeration")]
    BitDepthTooLarge(u32),
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("cell enumeration exceeded the cap of {cap}")]
    EnumerationCapExceeded { cap: u64 },
    #[error("invalid classifier spec '{0}'")]
    InvalidClassifierSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
