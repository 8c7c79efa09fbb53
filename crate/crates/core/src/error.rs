use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sample count {got} does not match grid mode count {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("multiplier requires mean-zero fields (slot {slot} has a nonzero mean mode)")]
    MeanZeroRequired { slot: usize },

    #[error("field must be real-valued")]
    RealRequired,

    #[error("unsupported arity {0} (supported: 2..=5)")]
    UnsupportedArity(usize),

    #[error("zero frequency passed to a multiplier that divides by frequencies")]
    ZeroFrequency,

    #[error("imaginary residue {residue:.3e} exceeds tolerance for a real-valued form (value {value:.6e})")]
    ImaginaryResidue { value: f64, residue: f64 },

    #[error("mapped spectrum does not fit the target grid: {0}")]
    ResolutionLoss(String),

    #[error("solver produced a non-finite coefficient at step {step} (t = {time})")]
    NonFinite {
        step: usize,
        time: f64,
        snapshot: Box<crate::spectral::SpectralField>,
    },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("golden value mismatch for `{key}`: stored {stored}, computed {computed}")]
    GoldenMismatch {
        key: String,
        stored: String,
        computed: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
