//! Discrete-mode simulator for transverse-momentum-entangled photon pairs.
//!
//! The toolkit models a down-conversion source whose two photons are
//! entangled in transverse momentum, a programmable phase mask that
//! engineers the exchange symmetry of the pair, and the two-photon
//! interferometer that reads that symmetry out as Hong-Ou-Mandel bunching
//! or anti-bunching. On top of the state machinery sit coincidence scans
//! (closed form, full propagation, and Poisson Monte Carlo) and the
//! analysis chain: normalization, visibilities, cosine and Gaussian fits,
//! and inversion of the coincidence law back to the engineered phase.
//!
//! The crate is organized by stage of the experiment:
//!
//! - [`grid`] / [`state`]: the momentum grid and the two-photon state.
//! - [`elements`]: phase masks, mirrors, delays, and the coherence model.
//! - [`interferometer`]: the beamsplitter, collection fibers, and parity
//!   bookkeeping.
//! - [`coincidence`]: rate laws, scans, count sampling, symmetry maps.
//! - [`analysis`]: normalization, visibility, fits, phase retrieval.

pub mod analysis;
pub mod coincidence;
pub mod elements;
pub mod error;
pub mod grid;
pub mod interferometer;
pub mod state;

pub use analysis::{
    fit_cosine, fit_cosine_with_errors, fit_gaussian, normalize_scan, retrieve_phase, visibility,
    FitParameter, FitResult, VisibilityKind, VisibilityReport,
};
pub use coincidence::{
    analytic_rate, delay_scan, delay_scan_circuit, multimode_map, phase_scan, sample_counts,
    ImperfectionModel, MultimodeMap, ScanResult,
};
pub use elements::{
    apply_mask, apply_mirror, set_delay, CoherenceModel, PhaseMask, FILTER_COHERENCE_CONSTANT,
};
pub use error::{Error, Result};
pub use grid::{MomentumGrid, MomentumLabel};
pub use interferometer::{
    apply_beamsplitter, couple_collection, reflection_parity, run, run_with_gamma, Circuit,
    CollectionMode, DetectionDistribution, Element, OutputAmplitudes, ParityReport, Port,
};
pub use state::{Arm, ArmState, BiphotonState, TwoModeState};
