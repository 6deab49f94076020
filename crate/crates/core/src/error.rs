use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0} (only 2 and 4 are supported)")]
    UnsupportedDimension(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("not a valid density operator: {0}")]
    NotDensity(&'static str),

    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("completeness violated: max |sum E^dag E - I| = {0:e}")]
    Completeness(f64),

    #[error("instrument has no outcome labelled {0}")]
    UnknownOutcome(u32),

    #[error("instrument needs outcomes labelled 1 and 2")]
    MissingDiscriminationOutcomes,

    #[error("outcome probability {0:e} is too small to normalize the posterior state")]
    ZeroProbability(f64),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(&'static str),

    #[error("POVM element eigenvalues ({lo}, {hi}) leave [0, 1]")]
    PovmOutOfBounds { lo: f64, hi: f64 },

    #[error("target probability {target} exceeds the Helstrom bound {bound}")]
    Infeasible { target: f64, bound: f64 },

    #[error("{what} must be at least {min}, got {value}")]
    TooSmall {
        what: &'static str,
        value: usize,
        min: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("{0}")]
    InvalidArgument(String),
}
