use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("non-finite numeric value: {0}")]
    Numeric(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("stitch error: {0}")]
    Stitch(String),
    #[error("face budget unreachable: {0}")]
    Budget(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("vocabulary error: {0}")]
    Vocab(String),
    #[error("duplicate panel name: {0}")]
    DuplicateName(String),
    #[error("value out of quantization range: {0}")]
    Range(String),
    #[error("malformed sequence at position {position}: {reason}")]
    MalformedSequence { position: usize, reason: String },
    #[error("unmatched stitch slot {0}")]
    UnmatchedStitch(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("token sequence too long: {got} > {max}")]
    Length { got: usize, max: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("empty mesh")]
    EmptyMesh,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
