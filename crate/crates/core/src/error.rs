use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("idx parse error at offset {offset}: {kind}")]
    Parse { offset: usize, kind: ParseErrorKind },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty dataset")]
    EmptyDataset,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },

    #[error("truncated file: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("count mismatch: {images} images, {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("label {0} out of range 0..=9")]
    BadLabel(u8),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
