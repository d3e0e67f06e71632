use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid frame spec: {0}")]
    InvalidFrameSpec(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid hermitian boundary")]
    InvalidHermitianBoundary,
    #[error("frequency {0} Hz out of range")]
    FrequencyOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("unreachable color")]
    UnreachableColor,
    #[error("below first coefficient center")]
    BelowFirstCoefficient,
    #[error("non-invertible framing: {0}")]
    NonInvertibleFraming(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("unknown provenance")]
    UnknownProvenance,
    #[error("bin not excited")]
    BinNotExcited,
    #[error("window too short")]
    WindowTooShort,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
    #[error("png decode: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("png encode: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
