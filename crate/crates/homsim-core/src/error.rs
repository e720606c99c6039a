//! Error type shared across the simulator.

use thiserror::Error;

/// Errors produced by state construction, optical elements, propagation,
/// scans, and fits.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("grid size must be an odd integer >= 3, got {0}")]
    EvenGrid(usize),
    #[error("grid half-extent k_max must be positive and finite, got {0}")]
    InvalidKMax(f64),
    #[error("momentum label ({0}, {1}) is outside the grid")]
    LabelOutOfGrid(i32, i32),
    #[error("k0 = 0 has no distinct partner mode")]
    DegenerateMode,
    #[error("selected mode pair carries zero weight")]
    ZeroWeight,
    #[error("phase mask has {got} entries, grid has {expected} modes")]
    MaskSize { expected: usize, got: usize },
    #[error("phase mask contains a non-finite value at index {0}")]
    NonFinitePhase(usize),
    #[error("amplitude at ({0}, {1}) -> ({2}, {3}) is not finite")]
    NonFiniteAmplitude(i32, i32, i32, i32),
    #[error("mask and state are sampled on different grids")]
    GridMismatch,
    #[error("beamsplitter transmittance must satisfy 0 < T < 1, got {0}")]
    InvalidSplit(f64),
    #[error("coherence length must be positive, got {0}")]
    InvalidCoherence(f64),
    #[error("filter parameters must satisfy 0 < bandwidth < center wavelength, got center {center}, bandwidth {bandwidth}")]
    InvalidFilter { center: f64, bandwidth: f64 },
    #[error("mode-overlap factor must lie in [0, 1], got {0}")]
    InvalidOverlap(f64),
    #[error("rate parameters must be non-negative (pair rate and integration time positive)")]
    InvalidRates,
    #[error("scan axis is empty")]
    EmptyScan,
    #[error("expected count is negative at point {index}: {value}")]
    NegativeExpected { index: usize, value: f64 },
    #[error("need at least {need} baseline points with |dL| > {cutoff:e} m, found {found}")]
    InsufficientBaseline { need: usize, found: usize, cutoff: f64 },
    #[error("design matrix is degenerate (all abscissae equal)")]
    DegenerateDesign,
    #[error("fit did not converge: {reason}")]
    FitDiverged { reason: String },
    #[error("normalized rate {0} is outside the invertible range [beta, 2 alpha + beta]")]
    RateOutOfRange(f64),
    #[error("collection window centered at k = 0 pairs with itself")]
    SelfPairedWindow,
    #[error("collection windows on the same port overlap (mode overlap {0:.3e})")]
    OverlappingWindows(f64),
    #[error("collection modes must sit on distinct ports")]
    SamePortCollection,
}

pub type Result<T> = std::result::Result<T, Error>;
