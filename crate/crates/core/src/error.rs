use thiserror::Error;

/// Errors raised by the optics, channel, protocol and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot compose an empty list of Jones operators")]
    EmptyComposition,

    #[error("Jones state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("objective returned a non-finite value ({value}) at {setting:?}")]
    NonFiniteObjective { value: f64, setting: [f64; 3] },

    #[error("invalid loop configuration: {0}")]
    InvalidLoop(String),

    #[error("single-path power is zero on the {0} path")]
    ZeroPathPower(&'static str),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("double click reached the decoder; the double-click policy must resolve it first")]
    UnresolvedDoubleClick,

    #[error("unknown entity `{0}` in ring")]
    UnknownEntity(String),

    #[error("invalid ring configuration: {0}")]
    InvalidRing(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("infeasible calibration target: {0}")]
    Infeasible(String),

    #[error("unknown sweep axis `{axis}`; sweepable parameters: {available}")]
    UnknownAxis { axis: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
