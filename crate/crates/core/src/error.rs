use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}:{line}: {message}")]
    TraceParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(
        "no delay samples for {op_type} chunks of {requested} MB; available sizes: {available:?}"
    )]
    MissingBucket {
        op_type: String,
        requested: f64,
        available: Vec<f64>,
    },

    #[error("unstable: normalized load {rho:.6} exceeds thread count {threads}")]
    UnstableLoad { rho: f64, threads: u32 },

    #[error("approximation undefined at r=1; use exact form")]
    ApproxUndefinedAtUnitRedundancy,

    #[error("no root found; check parameters")]
    NoRoot,

    #[error("queue length {0} below solvable range")]
    QueueBelowSolvableRange(f64),

    #[error("queue length {0} above solvable range")]
    QueueAboveSolvableRange(f64),

    #[error("insufficient strips: have {have}, need {need}")]
    InsufficientStrips { have: usize, need: usize },

    #[error("duplicate strip index {0}")]
    DuplicateStrip(u32),

    #[error("strip index {index} out of range for {total} strips")]
    StripIndexOutOfRange { index: u32, total: u32 },

    #[error("{0}")]
    Divisibility(String),

    #[error("object not found: {0}")]
    NotFound(String),

    #[error("range [{offset}, {end}) exceeds object size {size}")]
    RangeOutOfBounds { offset: u64, end: u64, size: u64 },

    #[error("multipart upload for {key} is missing part {part}")]
    MissingPart { key: String, part: u32 },

    #[error("no multipart upload in progress for {0}")]
    NoMultipart(String),

    #[error("numerical solver: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for configuration and
    /// usage problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::TraceParse { .. }
            | Error::Divisibility(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::NotFound(_)
            | Error::ApproxUndefinedAtUnitRedundancy => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
