//! Coincidence rates and simulated counts: the closed-form rate law,
//! delay and phase scans through either the analytic model or the full
//! interferometer, Poisson count sampling, and per-mode symmetry maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Poisson;

use crate::elements::{CoherenceModel, PhaseMask};
use crate::error::{Error, Result};
use crate::grid::MomentumLabel;
use crate::interferometer::{run_with_gamma, Circuit};
use crate::state::BiphotonState;

/// Detector-side imperfections and rates: beamsplitter split, mode overlap
/// at the beamsplitter, accidental background, and counting budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectionModel {
    transmittance: f64,
    mode_overlap: f64,
    accidental_rate: f64,
    pair_rate: f64,
    integration_time: f64,
}

impl ImperfectionModel {
    pub fn new(
        transmittance: f64,
        mode_overlap: f64,
        accidental_rate: f64,
        pair_rate: f64,
        integration_time: f64,
    ) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance < 1.0) {
            return Err(Error::InvalidSplit(transmittance));
        }
        if !(0.0..=1.0).contains(&mode_overlap) || !mode_overlap.is_finite() {
            return Err(Error::InvalidOverlap(mode_overlap));
        }
        if !(accidental_rate >= 0.0) || !(pair_rate > 0.0) || !(integration_time > 0.0) {
            return Err(Error::InvalidRates);
        }
        Ok(Self {
            transmittance,
            mode_overlap,
            accidental_rate,
            pair_rate,
            integration_time,
        })
    }

    /// Balanced lossless splitter, perfect overlap, no accidentals, and an
    /// arbitrary desk-scale counting budget of 1e4 pairs/s for 1 s per
    /// point.
    pub fn ideal() -> Self {
        Self::new(0.5, 1.0, 0.0, 1e4, 1.0).expect("ideal parameters are valid")
    }

    pub fn with_transmittance(mut self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidSplit(t));
        }
        self.transmittance = t;
        Ok(self)
    }

    pub fn with_mode_overlap(mut self, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
            return Err(Error::InvalidOverlap(mu));
        }
        self.mode_overlap = mu;
        Ok(self)
    }

    pub fn with_rates(mut self, pair_rate: f64, integration_time: f64, accidental_rate: f64) -> Result<Self> {
        if !(accidental_rate >= 0.0) || !(pair_rate > 0.0) || !(integration_time > 0.0) {
            return Err(Error::InvalidRates);
        }
        self.pair_rate = pair_rate;
        self.integration_time = integration_time;
        self.accidental_rate = accidental_rate;
        Ok(self)
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn reflectance(&self) -> f64 {
        1.0 - self.transmittance
    }

    pub fn mode_overlap(&self) -> f64 {
        self.mode_overlap
    }

    pub fn accidental_rate(&self) -> f64 {
        self.accidental_rate
    }

    pub fn pair_rate(&self) -> f64 {
        self.pair_rate
    }

    pub fn integration_time(&self) -> f64 {
        self.integration_time
    }

    /// Interference visibility of an unbalanced splitter, V = 2TR/(T^2+R^2).
    pub fn visibility_factor(&self) -> f64 {
        let t = self.transmittance;
        let r = self.reflectance();
        2.0 * t * r / (t * t + r * r)
    }

    /// Cross-port coincidence probability of distinguishable photons,
    /// T^2 + R^2. This is the normalization baseline.
    pub fn baseline_probability(&self) -> f64 {
        let t = self.transmittance;
        let r = self.reflectance();
        t * t + r * r
    }

    /// Expected accidental counts per scan point.
    pub fn accidentals_per_point(&self) -> f64 {
        self.accidental_rate * self.integration_time
    }

    /// Expected true-coincidence counts per point at the normalization
    /// baseline.
    pub fn baseline_counts(&self) -> f64 {
        self.pair_rate * self.integration_time * self.baseline_probability()
    }
}

/// The normalized coincidence rate C = 1 - V mu gamma(dL) cos(phi).
/// The ideal model reduces it to 1 - cos(phi).
pub fn analytic_rate(phi: f64, delay: f64, model: &ImperfectionModel, coherence: &CoherenceModel) -> f64 {
    1.0 - model.visibility_factor() * model.mode_overlap * coherence.gamma(delay) * phi.cos()
}

/// A raw and normalized coincidence trace along one scan axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Delay values in meters, or phases in radians.
    pub axis: Vec<f64>,
    /// Poisson-sampled counts; empty until [`ScanResult::sample`] runs.
    pub raw_counts: Vec<u64>,
    /// Deterministic expected counts per point (signal plus accidentals).
    pub expected: Vec<f64>,
    /// Accidental-subtracted counts over the baseline, i.e. the estimate
    /// of C at each point.
    pub normalized: Vec<f64>,
    /// One-sigma Poisson error on `normalized`.
    pub stderr: Vec<f64>,
    /// Expected accidental counts included in every point.
    pub accidental_per_point: f64,
    /// Expected true-coincidence counts at the normalization baseline.
    pub baseline_counts: f64,
}

impl ScanResult {
    fn from_probabilities(
        axis: Vec<f64>,
        p_cc: Vec<f64>,
        baseline_probability: f64,
        model: &ImperfectionModel,
    ) -> Self {
        let acc = model.accidentals_per_point();
        let scale = model.pair_rate * model.integration_time;
        let baseline_counts = scale * baseline_probability;
        let expected: Vec<f64> = p_cc.iter().map(|p| scale * p + acc).collect();
        let normalized: Vec<f64> = expected.iter().map(|e| (e - acc) / baseline_counts).collect();
        let stderr: Vec<f64> = expected.iter().map(|e| e.sqrt() / baseline_counts).collect();
        Self {
            axis,
            raw_counts: Vec::new(),
            expected,
            normalized,
            stderr,
            accidental_per_point: acc,
            baseline_counts,
        }
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn is_sampled(&self) -> bool {
        !self.raw_counts.is_empty()
    }

    /// Draw Poisson counts for every point and recompute the normalized
    /// trace and its errors from them. `trials` accumulates that many
    /// independent repetitions per point; the expected counts, accidentals,
    /// and baseline scale along so the record stays self-consistent.
    pub fn sample(&mut self, seed: u64, trials: u32) -> Result<()> {
        let trials = trials.max(1) as f64;
        for e in self.expected.iter_mut() {
            *e *= trials;
        }
        self.accidental_per_point *= trials;
        self.baseline_counts *= trials;
        self.raw_counts = sample_counts(&self.expected, seed)?;
        let acc = self.accidental_per_point;
        let baseline = self.baseline_counts;
        self.normalized = self
            .raw_counts
            .iter()
            .map(|&c| (c as f64 - acc) / baseline)
            .collect();
        self.stderr = self
            .raw_counts
            .iter()
            .map(|&c| (c as f64).sqrt() / baseline)
            .collect();
        Ok(())
    }

    /// The index of the point whose axis value is closest to zero.
    pub fn index_nearest_zero(&self) -> Option<usize> {
        self.axis
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
    }
}

/// Delay scan of the closed-form model at a fixed mask phase.
pub fn delay_scan(
    model: &ImperfectionModel,
    coherence: &CoherenceModel,
    phi: f64,
    delays: &[f64],
) -> Result<ScanResult> {
    if delays.is_empty() {
        return Err(Error::EmptyScan);
    }
    let base_p = model.baseline_probability();
    let p_cc = delays
        .iter()
        .map(|&dl| base_p * analytic_rate(phi, dl, model, coherence))
        .collect();
    Ok(ScanResult::from_probabilities(
        delays.to_vec(),
        p_cc,
        base_p,
        model,
    ))
}

/// Delay scan through the full interferometer: per point the idler delay is
/// set, the source is propagated, and the detected cross-port probability is
/// recorded. The model contributes mode overlap and counting rates; the
/// splitter ratio comes from the circuit itself.
pub fn delay_scan_circuit(
    circuit: &Circuit,
    source: &BiphotonState,
    k0: MomentumLabel,
    model: &ImperfectionModel,
    delays: &[f64],
) -> Result<ScanResult> {
    if delays.is_empty() {
        return Err(Error::EmptyScan);
    }
    let baseline = run_with_gamma(circuit, source, k0, 0.0)?.p_cc;
    if baseline <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    let mut p_cc = Vec::with_capacity(delays.len());
    for &dl in delays {
        let gamma = model.mode_overlap() * circuit.coherence().gamma(dl);
        p_cc.push(run_with_gamma(circuit, source, k0, gamma)?.p_cc);
    }
    Ok(ScanResult::from_probabilities(
        delays.to_vec(),
        p_cc,
        baseline,
        model,
    ))
}

/// Phase scan of the closed-form model at zero delay. The expected
/// normalized trace is alpha (1 - cos phi) + beta with alpha = V mu and
/// beta = 1 - V mu, so alpha + beta = 1 by construction.
pub fn phase_scan(
    model: &ImperfectionModel,
    coherence: &CoherenceModel,
    phis: &[f64],
) -> Result<ScanResult> {
    if phis.is_empty() {
        return Err(Error::EmptyScan);
    }
    let base_p = model.baseline_probability();
    let p_cc = phis
        .iter()
        .map(|&phi| base_p * analytic_rate(phi, 0.0, model, coherence))
        .collect();
    Ok(ScanResult::from_probabilities(
        phis.to_vec(),
        p_cc,
        base_p,
        model,
    ))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent Poisson draws, one per expected value. Each point gets its
/// own substream derived from (seed, index), so the result does not depend
/// on evaluation order.
pub fn sample_counts(expected: &[f64], seed: u64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(expected.len());
    for (i, &lambda) in expected.iter().enumerate() {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::NegativeExpected { index: i, value: lambda });
        }
        if lambda == 0.0 {
            out.push(0);
            continue;
        }
        let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let poisson = Poisson::new(lambda).expect("lambda checked positive");
        let draw: f64 = rng.sample(poisson);
        out.push(draw as u64);
    }
    Ok(out)
}

/// Normalized coincidence rate for every momentum pair of the positive half
/// plane under one mask: the per-mode symmetry map.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodeMap {
    entries: Vec<(MomentumLabel, f64)>,
}

impl MultimodeMap {
    pub fn entries(&self) -> &[(MomentumLabel, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value_at(&self, k0: MomentumLabel) -> Option<f64> {
        self.entries
            .iter()
            .find(|(k, _)| *k == k0)
            .map(|(_, c)| *c)
    }
}

/// Evaluate C(k0) = 1 - V mu gamma(dL) cos(phi(k0) - phi(-k0)) on every
/// half-plane mode of the mask's grid. Each pair {k0, -k0} appears once.
pub fn multimode_map(
    mask: &PhaseMask,
    model: &ImperfectionModel,
    coherence: &CoherenceModel,
    delay: f64,
) -> Result<MultimodeMap> {
    let contrast = model.visibility_factor() * model.mode_overlap * coherence.gamma(delay);
    let grid = *mask.grid();
    let mut entries = Vec::with_capacity((grid.mode_count() - 1) / 2);
    for k0 in grid.half_plane() {
        let phi = mask.relative_phase(k0)?;
        entries.push((k0, 1.0 - contrast * phi.cos()));
    }
    Ok(MultimodeMap { entries })
}
