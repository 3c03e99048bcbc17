use alloc::string::String;

/// Errors surfaced by every fallible operation in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid kernel size {0}: must be odd and at least 1")]
    InvalidKernelSize(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("binary target expected, found {0}")]
    NonBinaryTarget(f64),
    #[error("schedule step {step} exceeds total {total}")]
    ScheduleStep { step: usize, total: usize },
    #[error("batch normalization needs at least two values per channel in train mode")]
    DegenerateBatch,
    #[error("cache does not belong to the current parameters")]
    StaleCache,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unsupported protocol: {0}")]
    UnsupportedProtocol(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::Error::Shape(alloc::format!($($arg)*))
    };
}
pub(crate) use shape_err;
