use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdxError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative spectral density {density} at f = {frequency}")]
    NegativeDensity { frequency: f64, density: f64 },

    #[error("breakpoint frequencies must be strictly increasing (at index {index})")]
    UnsortedBreakpoints { index: usize },

    #[error("truncation at f_max = {f_max} leaves tail mass {tail:.3e} above tolerance {tolerance:.3e}")]
    TailTooHeavy { f_max: f64, tail: f64, tolerance: f64 },

    #[error("band [{low}, {high}) lies outside the frequency grid [-{f_max}, {f_max}]")]
    BandOutOfRange { low: f64, high: f64, f_max: f64 },

    #[error("frequency {frequency} lies outside the baseband of half-width {half_rate}")]
    OutsideBaseband { frequency: f64, half_rate: f64 },

    #[error("branch {branch} support is not aliasing-free at rate {rate}")]
    NotAliasingFree { branch: usize, rate: f64 },

    #[error("no aliasing-free allocation with up to {l_max} branches; {unassigned:.6} Hz left unassigned")]
    InsufficientBranches { l_max: usize, unassigned: f64 },

    #[error("density integrates to {mass}, not 1 (tolerance {tolerance:.0e})")]
    DensityNotNormalized { mass: f64, tolerance: f64 },

    #[error("sampling rate {f_s} does not divide the dense grid rate {dense_rate}")]
    DecimationMismatch { f_s: f64, dense_rate: f64 },

    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for AdxError {
    fn from(e: std::io::Error) -> Self {
        AdxError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AdxError>;
