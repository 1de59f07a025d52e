use thiserror::Error;

/// Errors from the TMDS codec.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum TmdsError {
    #[error("control symbol (ctl={0:02b}) is not a video word")]
    ControlSymbol(u8),
    #[error("control value {0} out of range 0..=3")]
    InvalidControl(u8),
}

/// Problems with the DTCX capture container.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected \"DTCX\"")]
    BadMagic([u8; 4]),
    #[error("unsupported DTCX version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("trailing data after payload ({0} bytes)")]
    TrailingData(u64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tmds(#[from] TmdsError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("unknown timing `{name}`; available: {available}")]
    UnknownTiming { name: String, available: String },
    #[error("invalid timing `{name}`: {reason}")]
    InvalidTiming { name: String, reason: String },
    #[error("harmonic index must be at least 1")]
    ZeroHarmonic,
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    Dimensions {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("input too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("empty bit stream")]
    EmptyStream,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),
    #[error("expected a 3-channel image, got {0} channels")]
    ChannelCount(u8),
    #[error("reference text is empty")]
    EmptyReference,
    #[error("config: {0}")]
    Config(String),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
