use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("truncated file at line {line}: {message}")]
    TruncatedFile { line: usize, message: String },

    #[error("malformed number {token:?} at line {line}")]
    MalformedNumber { line: usize, token: String },

    #[error("joint count mismatch at line {line}: expected {expected}, found {found}")]
    JointCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("sequence has no frames")]
    EmptySequence,

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("index {index} out of bounds (len {len})")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("sequence with {frames} frames is too short for delta_t = {delta_t}")]
    SequenceTooShort { frames: usize, delta_t: usize },

    #[error("bandwidth fitting needs at least two joints, got {0}")]
    TooFewJoints(usize),

    #[error("taylor decomposition is defined for a single channel, got {0}")]
    MultiChannelUnsupported(usize),

    #[error("part map does not partition the joints: {0}")]
    PartMapIncomplete(String),

    #[error("operation requires 3 coordinate channels, got {0}")]
    UnsupportedChannelCount(usize),

    #[error("mask shape {found:?} does not match sequence frames x joints {expected:?}")]
    MaskShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mask has zero weight")]
    EmptyMask,

    #[error("memory bank is empty")]
    EmptyBank,

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("paired differences have zero variance")]
    ZeroVariance,

    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unknown action class {0:?}")]
    UnknownClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

impl Error {
    /// Stable machine-readable code, shared by the CLI and the C API.
    pub fn code(&self) -> &'static str {
        match self {
            Error::TruncatedFile { .. } => "TRUNCATED_FILE",
            Error::MalformedNumber { .. } => "MALFORMED_NUMBER",
            Error::JointCountMismatch { .. } => "JOINT_COUNT_MISMATCH",
            Error::EmptySequence => "EMPTY_SEQUENCE",
            Error::InvalidSequence(_) => "INVALID_SEQUENCE",
            Error::InvalidLayout(_) => "INVALID_LAYOUT",
            Error::IndexOutOfBounds { .. } => "INDEX_OUT_OF_BOUNDS",
            Error::NonFiniteInput(_) => "NON_FINITE_INPUT",
            Error::SequenceTooShort { .. } => "SEQUENCE_TOO_SHORT",
            Error::TooFewJoints(_) => "TOO_FEW_JOINTS",
            Error::MultiChannelUnsupported(_) => "MULTI_CHANNEL_UNSUPPORTED",
            Error::PartMapIncomplete(_) => "PART_MAP_INCOMPLETE",
            Error::UnsupportedChannelCount(_) => "UNSUPPORTED_CHANNEL_COUNT",
            Error::MaskShapeMismatch { .. } => "MASK_SHAPE_MISMATCH",
            Error::ShapeMismatch(_) => "SHAPE_MISMATCH",
            Error::EmptyMask => "EMPTY_MASK",
            Error::EmptyBank => "EMPTY_BANK",
            Error::DegenerateSplit(_) => "DEGENERATE_SPLIT",
            Error::ZeroVariance => "ZERO_VARIANCE",
            Error::LengthMismatch(..) => "LENGTH_MISMATCH",
            Error::UnknownClass(_) => "UNKNOWN_CLASS",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::Config(_) => "CONFIG",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
