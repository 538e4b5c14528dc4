use thiserror::Error;

/// Errors raised by the identification library.
///
/// Sample and turn indices in error payloads are 1-based, matching the public API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("sample index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),

    #[error("leg speeds differ: {first} m/s vs {second} m/s")]
    UnequalLegSpeeds { first: f64, second: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("target and platform coincide at sample {index}")]
    CoincidentPositions { index: usize },

    #[error("alpha_theta must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("matrix is not a valid bearing FIM: {0}")]
    InvalidFim(String),

    #[error("unit information vector is degenerate")]
    DegenerateUnitFim,

    #[error("trace of FIM block {block} is not positive ({trace})")]
    NonPositiveTrace { block: &'static str, trace: f64 },

    #[error("FIM is singular or ill-conditioned (condition estimate {condition:e}); geometry unobservable")]
    SingularFim { condition: f64 },

    #[error("eigenvalues of {0} are repeated; axis is ambiguous")]
    AmbiguousAxis(&'static str),

    #[error("target velocity estimate is zero")]
    ZeroTargetVelocity,

    #[error(
        "bearing axis is orthogonal to the cross-target direction; platform on the target line"
    )]
    OnTargetLine,

    #[error("endpoint guesses coincide")]
    CoincidentEndpoints,

    #[error("invalid alpha_theta bounds [{min}, {max}]")]
    InvalidAlphaBounds { min: f64, max: f64 },

    #[error("grid count must be at least {min}, got {got}")]
    TooFewGridPoints { min: usize, got: usize },

    #[error("invalid simplex parameters: {0}")]
    InvalidSimplexParams(String),

    #[error("objective evaluation failed at the initial simplex: {0}")]
    ObjectiveFailure(String),

    #[error("no initial guesses supplied")]
    NoGuesses,

    #[error("every zone optimization failed: {}", format_zone_failures(.0))]
    AllZonesFailed(Vec<(String, Box<Error>)>),
}

fn format_zone_failures(failures: &[(String, Box<Error>)]) -> String {
    failures
        .iter()
        .map(|(zone, err)| format!("zone {zone}: {err}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
