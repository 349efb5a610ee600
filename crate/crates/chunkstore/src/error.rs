use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("neighbor set is empty")]
    EmptyNeighborSet,

    #[error("softmax temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("interpolation coefficient must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),

    #[error("vocabulary file invalid: {0}")]
    InvalidVocab(String),

    #[error("sentence pair invalid: {0}")]
    InvalidPair(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("decoder prefix must begin with BOS")]
    PrefixMissingBos,

    #[error("chunk size must be at least 1")]
    ChunkSizeZero,

    #[error("reduced dimension {reduced} exceeds full state dimension {full}")]
    ReducedDimExceedsFull { reduced: usize, full: usize },

    #[error("PCA needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("nothing to append")]
    EmptyAppend,

    #[error("k-means needs at least {needed} entries, got {got}")]
    TooFewEntries { needed: usize, got: usize },

    #[error("search index covers no entries")]
    EmptyIndex,

    #[error("neighbors' cache is empty")]
    EmptyCache,

    #[error("non-PAD chunk position {position} carries the PAD state sentinel")]
    SentinelDereference { position: usize },

    #[error("varying chunk size {interval} exceeds stored chunk size {stored}")]
    VaryExceedsStored { interval: u64, stored: usize },

    #[error("source length {len} exceeds the configured bound {bound}")]
    SourceTooLong { len: usize, bound: usize },

    #[error("hypothesis and reference lists differ in length: {hyps} vs {refs}")]
    LengthMismatch { hyps: usize, refs: usize },

    #[error("bad file magic: expected {expected:?}")]
    BadMagic { expected: [u8; 4] },

    #[error("unsupported file version {got} (expected {expected})")]
    VersionMismatch { expected: u32, got: u32 },

    #[error("file truncated while reading {context}")]
    TruncatedFile { context: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
