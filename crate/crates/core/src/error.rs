use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("data length {len} does not match shape {shape:?}")]
    LengthMismatch { shape: Vec<usize>, len: usize },
    #[error("invalid shape {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(&'static str),
    #[error("window has zero total weight")]
    EmptyWindow,
    #[error("invalid layer configuration: {0}")]
    InvalidLayer(&'static str),
    #[error("backward called without a cached forward pass")]
    MissingCache,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("network was built for the {built:?} regime but training requested {requested:?}")]
    RegimeMismatch {
        built: crate::train::Regime,
        requested: crate::train::Regime,
    },
}
