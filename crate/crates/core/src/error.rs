use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every algorithm in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("size mismatch: {left} vs {right} points")]
    SizeMismatch { left: usize, right: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("k = {k} exceeds the {available} reference points")]
    KTooLarge { k: usize, available: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("target count {target} exceeds the {available} available points")]
    TargetTooLarge { target: usize, available: usize },
    #[error("cloud has no spread in its principal plane")]
    DegenerateCloud,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("ambiguous endpoint pairing: {0}")]
    AmbiguousPairing(String),
    #[error("ill-conditioned fit: abscissa spread {spread:.3} mm is below 1 mm")]
    IllConditioned { spread: f64 },
    #[error("rib sample counts differ between skeletons")]
    CountMismatch,
    #[error("rib level {0} is missing")]
    MissingRib(u8),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}
