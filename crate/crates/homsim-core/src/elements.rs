//! Single-arm optical elements: phase masks, mirrors, delay lines, and the
//! finite-coherence model that sets the interference envelope.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, MomentumLabel};
use crate::state::{Arm, BiphotonState};

/// Per-pixel phase map applied by the modulator, radians on each grid mode.
/// Values are stored unwrapped; only [`PhaseMask::relative_phase`] reduces
/// to the principal branch.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    grid: MomentumGrid,
    phase: Vec<f64>,
}

impl PhaseMask {
    /// A step mask: phase `jump` on the half plane kx > 0, zero on kx < 0,
    /// and jump/2 on the dividing line kx = 0.
    pub fn step(grid: MomentumGrid, jump: f64) -> Result<Self> {
        if !jump.is_finite() {
            return Err(Error::NonFinitePhase(0));
        }
        let phase = grid
            .labels()
            .map(|l| match l.ix.cmp(&0) {
                std::cmp::Ordering::Greater => jump,
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => jump / 2.0,
            })
            .collect();
        Ok(Self { grid, phase })
    }

    /// An arbitrary per-mode mask, one value per grid mode in row-major
    /// order. All values must be finite.
    pub fn from_values(grid: MomentumGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.mode_count() {
            return Err(Error::MaskSize {
                expected: grid.mode_count(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePhase(bad));
        }
        Ok(Self { grid, phase: values })
    }

    /// The all-zero identity mask.
    pub fn identity(grid: MomentumGrid) -> Self {
        Self {
            grid,
            phase: vec![0.0; grid.mode_count()],
        }
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn phase_at(&self, label: MomentumLabel) -> Result<f64> {
        Ok(self.phase[self.grid.index_of(label)?])
    }

    /// The relative phase phi(k0) - phi(-k0) imprinted between the two
    /// components of the anti-correlated pair, reduced to (-pi, pi].
    pub fn relative_phase(&self, k0: MomentumLabel) -> Result<f64> {
        if k0.is_origin() {
            return Err(Error::DegenerateMode);
        }
        let diff = self.phase_at(k0)? - self.phase_at(k0.negated())?;
        Ok(wrap_to_principal(diff))
    }
}

/// Reduce an angle to (-pi, pi].
pub(crate) fn wrap_to_principal(angle: f64) -> f64 {
    let wrapped = angle - (angle / (2.0 * PI)).round() * 2.0 * PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Apply a phase mask to one arm: each amplitude picks up e^{i phi(k)} at
/// that arm's momentum label. Unitary, so the norm is untouched.
pub fn apply_mask(state: &BiphotonState, mask: &PhaseMask, arm: Arm) -> Result<BiphotonState> {
    if state.grid() != mask.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = state.clone();
    // Labels inside the state are always on the grid, so the lookup is safe.
    out.scale_arm_phases(arm, |k| mask.phase[mask.grid.index_of(k).expect("state label on grid")]);
    Ok(out)
}

/// Mirror reflection on one arm: relabels k -> -k and increments that arm's
/// reflection count.
pub fn apply_mirror(state: &BiphotonState, arm: Arm) -> BiphotonState {
    let mut out = state.clone();
    out.negate_arm_labels(arm);
    out.arm_mut(arm).mirror_count += 1;
    out
}

/// Record the optical path offset of one arm. Setter semantics: a second
/// call overwrites, it does not accumulate.
pub fn set_delay(state: &BiphotonState, arm: Arm, delay: f64) -> BiphotonState {
    let mut out = state.clone();
    out.arm_mut(arm).delay = delay;
    out
}

/// Gaussian indistinguishability envelope set by the spectral filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceModel {
    coherence_length: f64,
}

/// gamma(dL) = exp(-dL^2 / (2 lc^2)) relates the coherence length to the
/// Gaussian envelope; with this convention lc = K lambda0^2 / dlambda for a
/// Gaussian filter of FWHM dlambda, where K = sqrt(2 ln 2) / pi. The
/// constant is pinned by the Fourier-transform oracle in the test suite.
pub const FILTER_COHERENCE_CONSTANT: f64 = 0.37478525580436656;

impl CoherenceModel {
    pub fn new(coherence_length: f64) -> Result<Self> {
        if !(coherence_length > 0.0) || !coherence_length.is_finite() {
            return Err(Error::InvalidCoherence(coherence_length));
        }
        Ok(Self { coherence_length })
    }

    /// Coherence length from a Gaussian bandpass filter: center wavelength
    /// and FWHM bandwidth, both in meters.
    pub fn from_filter(center_wavelength: f64, bandwidth_fwhm: f64) -> Result<Self> {
        if !(center_wavelength > 0.0)
            || !(bandwidth_fwhm > 0.0)
            || bandwidth_fwhm >= center_wavelength
            || !center_wavelength.is_finite()
            || !bandwidth_fwhm.is_finite()
        {
            return Err(Error::InvalidFilter {
                center: center_wavelength,
                bandwidth: bandwidth_fwhm,
            });
        }
        Self::new(FILTER_COHERENCE_CONSTANT * center_wavelength * center_wavelength / bandwidth_fwhm)
    }

    /// The default experimental filter: 3 nm FWHM centered at 810 nm.
    pub fn default_filter() -> Self {
        Self::from_filter(810e-9, 3e-9).expect("default filter parameters are valid")
    }

    pub fn coherence_length(&self) -> f64 {
        self.coherence_length
    }

    /// Overlap factor gamma(dL) in [0, 1]; even in dL, 1 only at dL = 0.
    pub fn gamma(&self, delay_difference: f64) -> f64 {
        let x = delay_difference / self.coherence_length;
        (-0.5 * x * x).exp()
    }
}
