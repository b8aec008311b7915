use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ensemble too small: need at least {required} particles, got {found}")]
    EnsembleTooSmall { required: usize, found: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("score training diverged at epoch {epoch} (loss = {loss})")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error(
        "non-finite particle {particle} at temperature {temperature}, iteration {iteration}"
    )]
    NonFiniteParticle {
        temperature: usize,
        iteration: usize,
        particle: usize,
    },

    #[error("singular innovation covariance")]
    SingularInnovation,

    #[error("assimilation failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::StepFailed { .. } => e,
            e => Error::StepFailed {
                step,
                source: alloc::boxed::Box::new(e),
            },
        }
    }
}
