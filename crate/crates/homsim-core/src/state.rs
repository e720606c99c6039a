//! Two-photon transverse-momentum states.
//!
//! A [`BiphotonState`] stores the joint amplitude over ordered pairs of
//! momentum labels, first slot for the photon routed into the signal arm,
//! second for the idler arm. The down-conversion source populates only the
//! anti-correlated pairs (k, -k), so the map stays O(n^2) sparse on an
//! n x n grid. Per-arm bookkeeping (mirror reflections, delay) rides along
//! with the amplitudes.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, MomentumLabel};

/// Which interferometer arm an element acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Signal,
    Idler,
}

/// Per-arm metadata accumulated during propagation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmState {
    /// Number of mirror reflections applied so far.
    pub mirror_count: u32,
    /// Optical path offset of this arm, meters.
    pub delay: f64,
}

/// Joint two-photon amplitude over (signal-mode, idler-mode) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonState {
    grid: MomentumGrid,
    amps: BTreeMap<(MomentumLabel, MomentumLabel), Complex64>,
    signal: ArmState,
    idler: ArmState,
}

impl BiphotonState {
    /// Flat-amplitude source state: an equal superposition over all
    /// anti-correlated pairs {(k, -k)} of the grid, normalized. The origin
    /// pairs with itself and carries the same weight as every other mode.
    pub fn spdc(grid: MomentumGrid) -> Self {
        Self::spdc_with_envelope(grid, None)
    }

    /// Source state with an optional radial Gaussian envelope of the given
    /// 1/e^2-style width (in cone-radius units) over |k|; `None` gives the
    /// thin-crystal flat profile.
    pub fn spdc_with_envelope(grid: MomentumGrid, radial_width: Option<f64>) -> Self {
        let mut amps = BTreeMap::new();
        for k in grid.labels() {
            let w = match radial_width {
                Some(width) => {
                    let (kx, ky) = grid.k_of(k);
                    let r2 = kx * kx + ky * ky;
                    (-r2 / (2.0 * width * width)).exp()
                }
                None => 1.0,
            };
            amps.insert((k, k.negated()), Complex64::new(w, 0.0));
        }
        let mut state = Self {
            grid,
            amps,
            signal: ArmState::default(),
            idler: ArmState::default(),
        };
        state.renormalize();
        state
    }

    /// A state from explicit amplitudes; renormalized on construction.
    pub fn from_amplitudes(
        grid: MomentumGrid,
        amps: BTreeMap<(MomentumLabel, MomentumLabel), Complex64>,
    ) -> Result<Self> {
        for ((s, i), a) in &amps {
            if !grid.contains(*s) {
                return Err(Error::LabelOutOfGrid(s.ix, s.iy));
            }
            if !grid.contains(*i) {
                return Err(Error::LabelOutOfGrid(i.ix, i.iy));
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFiniteAmplitude(s.ix, s.iy, i.ix, i.iy));
            }
        }
        let mut state = Self {
            grid,
            amps,
            signal: ArmState::default(),
            idler: ArmState::default(),
        };
        if state.norm_sqr() <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        state.renormalize();
        Ok(state)
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &BTreeMap<(MomentumLabel, MomentumLabel), Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, signal: MomentumLabel, idler: MomentumLabel) -> Complex64 {
        self.amps
            .get(&(signal, idler))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    pub fn arm(&self, arm: Arm) -> &ArmState {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }

    pub(crate) fn arm_mut(&mut self, arm: Arm) -> &mut ArmState {
        match arm {
            Arm::Signal => &mut self.signal,
            Arm::Idler => &mut self.idler,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn renormalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in self.amps.values_mut() {
                *a /= norm;
            }
        }
    }

    /// Multiply each amplitude by a mode-dependent phase on one arm.
    pub(crate) fn scale_arm_phases(&mut self, arm: Arm, phase_of: impl Fn(MomentumLabel) -> f64) {
        for ((s, i), a) in self.amps.iter_mut() {
            let k = match arm {
                Arm::Signal => *s,
                Arm::Idler => *i,
            };
            *a *= Complex64::from_polar(1.0, phase_of(k));
        }
    }

    /// Relabel k -> -k on one arm (a mirror reflection in the beam frame).
    pub(crate) fn negate_arm_labels(&mut self, arm: Arm) {
        let old = std::mem::take(&mut self.amps);
        for ((s, i), a) in old {
            let key = match arm {
                Arm::Signal => (s.negated(), i),
                Arm::Idler => (s, i.negated()),
            };
            self.amps.insert(key, a);
        }
    }

    /// Swap the signal and idler labels on every amplitude.
    pub fn exchange(&self) -> Self {
        let mut amps = BTreeMap::new();
        for ((s, i), a) in &self.amps {
            amps.insert((*i, *s), *a);
        }
        Self {
            grid: self.grid,
            amps,
            signal: self.signal,
            idler: self.idler,
        }
    }

    /// Hilbert-space inner product <self|other>.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .map(|(key, a)| a.conj() * other.amplitude(key.0, key.1))
            .sum()
    }

    /// Expectation value of the exchange operation, <psi|X|psi>.
    ///
    /// For the post-selected two-mode state with relative phase phi this
    /// equals cos(phi); it is +1 for the symmetric source state and -1 after
    /// a pi phase jump.
    pub fn exchange_expectation(&self) -> Complex64 {
        self.inner(&self.exchange())
    }

    /// Restrict the state to amplitudes whose momenta all lie in {k0, -k0}
    /// and renormalize. This is the momentum post-selection that defines the
    /// two-mode entangled state.
    pub fn condition_on_pair(&self, k0: MomentumLabel) -> Result<Self> {
        if k0.is_origin() {
            return Err(Error::DegenerateMode);
        }
        if !self.grid.contains(k0) {
            return Err(Error::LabelOutOfGrid(k0.ix, k0.iy));
        }
        let keep = [k0, k0.negated()];
        let amps: BTreeMap<_, _> = self
            .amps
            .iter()
            .filter(|((s, i), _)| keep.contains(s) && keep.contains(i))
            .map(|(k, a)| (*k, *a))
            .collect();
        let total: f64 = amps.values().map(|a| a.norm_sqr()).sum();
        if total <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        let mut state = Self {
            grid: self.grid,
            amps,
            signal: self.signal,
            idler: self.idler,
        };
        state.renormalize();
        Ok(state)
    }

    /// Post-select on the anti-correlated pair (k0, -k0), returning the
    /// two-mode form. Fails at the origin and when the pair carries no weight.
    pub fn post_select(&self, k0: MomentumLabel) -> Result<TwoModeState> {
        if k0.is_origin() {
            return Err(Error::DegenerateMode);
        }
        if !self.grid.contains(k0) {
            return Err(Error::LabelOutOfGrid(k0.ix, k0.iy));
        }
        let c_plus = self.amplitude(k0, k0.negated());
        let c_minus = self.amplitude(k0.negated(), k0);
        let total = c_plus.norm_sqr() + c_minus.norm_sqr();
        if total <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        let norm = total.sqrt();
        Ok(TwoModeState {
            k0,
            c_plus: c_plus / norm,
            c_minus: c_minus / norm,
        })
    }
}

/// Post-selected two-mode state
/// c_plus |k0>_s |-k0>_i + c_minus |-k0>_s |k0>_i.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeState {
    pub k0: MomentumLabel,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl TwoModeState {
    /// The engineered state with relative exchange phase `phi`:
    /// (|k0,-k0> + e^{i phi} |-k0,k0>) / sqrt(2).
    pub fn with_phase(k0: MomentumLabel, phi: f64) -> Result<Self> {
        if k0.is_origin() {
            return Err(Error::DegenerateMode);
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ok(Self {
            k0,
            c_plus: Complex64::new(r, 0.0),
            c_minus: Complex64::from_polar(r, phi),
        })
    }

    /// Relative phase arg(c_minus / c_plus) in (-pi, pi].
    pub fn relative_phase(&self) -> f64 {
        let arg = (self.c_minus * self.c_plus.conj()).arg();
        // atan2 returns [-pi, pi]; fold the branch point onto +pi.
        if arg == -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            arg
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }

    /// <psi|X|psi> on the two-mode subspace: 2 Re(conj(c_plus) c_minus).
    pub fn exchange_expectation(&self) -> f64 {
        2.0 * (self.c_plus.conj() * self.c_minus).re
    }

    /// Embed back into a sparse biphoton state (used by tests and the
    /// interferometer oracle).
    pub fn to_biphoton(&self, grid: MomentumGrid) -> Result<BiphotonState> {
        let mut amps = BTreeMap::new();
        amps.insert((self.k0, self.k0.negated()), self.c_plus);
        amps.insert((self.k0.negated(), self.k0), self.c_minus);
        BiphotonState::from_amplitudes(grid, amps)
    }
}
