use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector length is incompatible with the block structure of a space.
    #[error("block mismatch: vector has ambient size {vector}, space expects {expected}")]
    BlockMismatch { vector: usize, expected: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Point evaluation of a Haar tensor needs the grid to resolve both halves.
    #[error("resolution too coarse: rectangle needs grid level >= {needed}, got {got}")]
    ResolutionTooCoarse { needed: u32, got: u32 },

    #[error("family too large: {size} vectors exceeds the sign-enumeration cap {cap}")]
    FamilyTooLarge { size: usize, cap: usize },

    /// Hall-type feasibility failure; carries a violating index set F.
    #[error("infeasible marriage instance, violating set {violating:?}")]
    Infeasible { violating: Vec<usize> },

    #[error("degenerate design matrix in power-log fit")]
    DegenerateFit,

    #[error("numeric guard: {0}")]
    NumericGuard(String),

    #[error("sampler exhausted")]
    SamplerExhausted,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
