use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core estimation and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("resolution mismatch: expected {expected:?}, got {actual:?}")]
    ResolutionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("cost volume mismatch: {0}")]
    VolumeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no jointly valid pixels")]
    NoValidPixels,
    #[error("non-positive median depth {0}")]
    NonPositiveMedian(f64),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("estimation failed for view subset {subset:?}: {source}")]
    Subset {
        subset: Vec<usize>,
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
