use thiserror::Error;

/// Errors raised by the pricing stack.
///
/// Variants are grouped by how a caller should react: `Input`/`Config` mean the
/// request itself is malformed, the remaining ones come out of the numerics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate diffusion: vol * sqrt(ttm) = {0}")]
    DegenerateDiffusion(f64),

    #[error("time {t} lies beyond the last curve node {last}")]
    Extrapolation { t: f64, last: f64 },

    #[error("negative forward {forward} at t={t}, T={maturity}")]
    NegativeForward { forward: f64, t: f64, maturity: f64 },

    #[error(
        "arbitrage-violating skew input: digital price {price} outside [0, {df}] \
         (forward={forward}, strike={strike}, vol={vol}, ttm={ttm}, slope={slope})"
    )]
    ArbitrageViolatingSkew {
        price: f64,
        df: f64,
        forward: f64,
        strike: f64,
        vol: f64,
        ttm: f64,
        slope: f64,
    },

    #[error(
        "non-invertible kernel at step {step}: unwind value {value} below floor {floor} \
         (arbitrage-violating forward skew)"
    )]
    NonInvertibleKernel { step: usize, value: f64, floor: f64 },

    #[error("negative hitting density at step {step}: {value}")]
    NegativeDensity { step: usize, value: f64 },

    #[error("integrity violation: cumulative hitting probability {0} exceeds 1")]
    Integrity(f64),

    #[error("scenario '{rung}' failed: {source}")]
    Rung {
        rung: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Input(_) | Error::Config(_) => ErrorKind::Config,
            Error::Rung { source, .. } => source.kind(),
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
