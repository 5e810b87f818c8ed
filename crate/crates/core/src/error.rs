use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration blew up at step {step} (non-finite state)")]
    BlowUp { step: usize },

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("simulated section is empty")]
    EmptySection,

    #[error("series too short: need at least {needed}, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("no scaling region: need at least {needed} usable radii, got {got}")]
    NoScalingRegion { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("prior rejection sampler exhausted {0} retries")]
    PriorRetriesExhausted(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
