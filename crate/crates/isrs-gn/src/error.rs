//! Error type shared by all pipeline stages.

use crate::fit::EffectiveParams;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A precondition on user-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Raman integrator produced a non-finite or non-positive power.
    /// Almost always means the step size is too large for the configured
    /// gain/power regime.
    #[error("raman integration failed at z = {z} km (channel {channel}): state became {reason}; reduce the z step")]
    StepFailure {
        z: f64,
        channel: usize,
        reason: &'static str,
    },

    /// The profile fit hit its iteration cap without meeting the
    /// convergence criterion. Carries the best parameters seen so far.
    #[error("profile fit did not converge after {iterations} iterations (best residual {residual:.3e})")]
    FitNotConverged {
        iterations: usize,
        residual: f64,
        best: EffectiveParams,
    },

    /// The fit converged to an unphysical attenuation.
    #[error("profile fit produced non-positive attenuation {alpha} 1/km")]
    UnphysicalFit { alpha: f64 },

    /// Closed-form evaluation produced a non-finite intermediate.
    #[error("non-finite value while evaluating channel {i} against interferer {k}")]
    NonFinite { i: usize, k: usize },

    /// A per-channel error with the channel index attached.
    #[error("channel {channel}: {source}")]
    Channel {
        channel: usize,
        #[source]
        source: Box<Error>,
    },

    /// A pipeline stage failed; wraps the underlying error with the stage
    /// name for CLI reporting.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn for_channel(channel: usize, source: Error) -> Self {
        Error::Channel {
            channel,
            source: Box::new(source),
        }
    }

    pub fn in_stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// True for errors caused by bad inputs rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidInput(_) => true,
            Error::Channel { source, .. } | Error::Stage { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }
}
