use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel transmittance is zero; the loss map cannot be inverted")]
    NonInvertible,

    #[error("quadrature direction {0} rad is missing from the measurement")]
    MissingDirection(f64),

    #[error("moments violate <q^4> >= <q^2>^2 in direction {direction} rad")]
    JensenViolation { direction: f64 },

    #[error("Fock cutoff {dim} leaves trace deficit {deficit:.3e}; try dim >= {suggested}")]
    InsufficientCutoff {
        dim: usize,
        deficit: f64,
        suggested: usize,
    },

    #[error("family provides no photon-number probabilities")]
    MissingProbabilities,

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
