//! The two-arm interferometer: element sequencing, reflection-parity
//! bookkeeping, the beamsplitter transform, and fiber-coupled detection.
//!
//! Mode labels are tracked in the beam frame: transmission and reflection at
//! the beamsplitter both preserve the transverse label, and every physical
//! momentum flip is booked by the arm mirrors. Each input operator maps as
//!
//! ```text
//! s(k) -> sqrt(T) a(k) + i sqrt(R) b(k)
//! i(k) -> i sqrt(R) a(k) + sqrt(T) b(k)
//! ```
//!
//! Partial distinguishability enters when probabilities are assembled: the
//! two-photon interference cross-terms are weighted by the overlap factor
//! gamma, so gamma = 1 recovers the fully quantum output and gamma = 0 the
//! classical (distinguishable) one.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::elements::{apply_mask, apply_mirror, set_delay, CoherenceModel, PhaseMask};
use crate::error::{Error, Result};
use crate::grid::{MomentumGrid, MomentumLabel};
use crate::state::{Arm, BiphotonState};

/// Beamsplitter output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    A,
    B,
}

impl std::fmt::Display for Port {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Port::A => write!(f, "a"),
            Port::B => write!(f, "b"),
        }
    }
}

/// One single-photon output mode: a port and a transverse label.
pub type OutMode = (Port, MomentumLabel);

/// An element placed in one interferometer arm.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Mirror,
    Mask(PhaseMask),
    /// Optical path offset in meters. Setter semantics.
    Delay(f64),
}

/// A fiber-coupled collection mode: a port, a window center, and a Gaussian
/// apodization radius in grid (pixel) units. Width 0 selects a single pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionMode {
    pub port: Port,
    pub center: MomentumLabel,
    pub width: f64,
}

impl CollectionMode {
    pub fn new(port: Port, center: MomentumLabel, width: f64) -> Self {
        Self { port, center, width }
    }

    /// Normalized window weights over the grid.
    fn weights(&self, grid: &MomentumGrid) -> Result<BTreeMap<OutMode, f64>> {
        if !grid.contains(self.center) {
            return Err(Error::LabelOutOfGrid(self.center.ix, self.center.iy));
        }
        let mut w = BTreeMap::new();
        if self.width == 0.0 {
            w.insert((self.port, self.center), 1.0);
            return Ok(w);
        }
        let mut norm_sqr = 0.0;
        for k in grid.labels() {
            let dx = (k.ix - self.center.ix) as f64;
            let dy = (k.iy - self.center.iy) as f64;
            let g = (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp();
            if g > 0.0 {
                norm_sqr += g * g;
                w.insert((self.port, k), g);
            }
        }
        let norm = norm_sqr.sqrt();
        for v in w.values_mut() {
            *v /= norm;
        }
        Ok(w)
    }

    /// The same window reflected through k -> -k on the same port.
    fn reflected(&self) -> Self {
        Self {
            port: self.port,
            center: self.center.negated(),
            width: self.width,
        }
    }
}

/// Probabilities of the two-photon detection outcomes behind the collection
/// fibers: cross-port coincidence, same-port bunching at the collected
/// momentum pair, and everything the fibers miss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionDistribution {
    pub p_cc: f64,
    pub p_aa: f64,
    pub p_bb: f64,
    pub residual: f64,
}

impl DetectionDistribution {
    pub fn sum(&self) -> f64 {
        self.p_cc + self.p_aa + self.p_bb + self.residual
    }

    /// Probability actually landing in a collection channel.
    pub fn captured(&self) -> f64 {
        self.p_cc + self.p_aa + self.p_bb
    }

    /// True when the fibers see nothing at all, e.g. after a reflection
    /// parity mismatch turns the pair momentum-correlated.
    pub fn is_dark(&self) -> bool {
        self.captured() < 1e-12
    }
}

/// Joint amplitudes behind the beamsplitter, keyed by the ordered pair
/// (signal-photon output mode, idler-photon output mode). Probabilities are
/// assembled from these with the gamma-weighted exchange terms.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputAmplitudes {
    grid: MomentumGrid,
    f: BTreeMap<(OutMode, OutMode), Complex64>,
}

impl OutputAmplitudes {
    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &BTreeMap<(OutMode, OutMode), Complex64> {
        &self.f
    }

    fn ordered(&self, m1: OutMode, m2: OutMode) -> Complex64 {
        self.f.get(&(m1, m2)).copied().unwrap_or(Complex64::ZERO)
    }

    /// Probability of finding one photon in each of two distinct output
    /// modes, or both in one mode when `m1 == m2`.
    pub fn outcome_probability(&self, m1: OutMode, m2: OutMode, gamma: f64) -> f64 {
        let f12 = self.ordered(m1, m2);
        let f21 = self.ordered(m2, m1);
        if m1 == m2 {
            (1.0 + gamma) * f12.norm_sqr()
        } else {
            f12.norm_sqr() + f21.norm_sqr() + 2.0 * gamma * (f12 * f21.conj()).re
        }
    }

    /// All unordered outcomes with nonzero amplitude.
    pub fn outcomes(&self, gamma: f64) -> BTreeMap<(OutMode, OutMode), f64> {
        let mut out = BTreeMap::new();
        for (m1, m2) in self.f.keys() {
            let key = if m1 <= m2 { (*m1, *m2) } else { (*m2, *m1) };
            out.entry(key)
                .or_insert_with(|| self.outcome_probability(key.0, key.1, gamma));
        }
        out
    }

    pub fn total_probability(&self, gamma: f64) -> f64 {
        self.outcomes(gamma).values().sum()
    }

    /// Totals by port class over all momenta: (cross-port, both in a,
    /// both in b).
    pub fn port_distribution(&self, gamma: f64) -> (f64, f64, f64) {
        let mut cc = 0.0;
        let mut aa = 0.0;
        let mut bb = 0.0;
        for (((p1, _), (p2, _)), prob) in self.outcomes(gamma) {
            match (p1, p2) {
                (Port::A, Port::A) => aa += prob,
                (Port::B, Port::B) => bb += prob,
                _ => cc += prob,
            }
        }
        (cc, aa, bb)
    }

    /// Project onto a pair of orthogonal fiber modes and return the
    /// coincidence probability between them.
    fn fiber_pair_probability(
        &self,
        u: &BTreeMap<OutMode, f64>,
        v: &BTreeMap<OutMode, f64>,
        gamma: f64,
    ) -> f64 {
        let mut f_uv = Complex64::ZERO;
        let mut f_vu = Complex64::ZERO;
        for ((m1, m2), a) in &self.f {
            if let (Some(wu), Some(wv)) = (u.get(m1), v.get(m2)) {
                f_uv += wu * wv * a;
            }
            if let (Some(wv), Some(wu)) = (v.get(m1), u.get(m2)) {
                f_vu += wu * wv * a;
            }
        }
        f_uv.norm_sqr() + f_vu.norm_sqr() + 2.0 * gamma * (f_uv * f_vu.conj()).re
    }
}

/// Expand the two-photon state through a beamsplitter with transmittance `t`
/// and reflectance `r`. Both must lie in (0, 1) and sum to 1.
pub fn apply_beamsplitter(state: &BiphotonState, t: f64, r: f64) -> Result<OutputAmplitudes> {
    if !(t > 0.0 && t < 1.0) || !(r > 0.0 && r < 1.0) || (t + r - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSplit(t));
    }
    let st = t.sqrt();
    let sr = r.sqrt();
    let trans = Complex64::new(st, 0.0);
    let refl = Complex64::new(0.0, sr);
    let mut f: BTreeMap<(OutMode, OutMode), Complex64> = BTreeMap::new();
    for ((ks, ki), amp) in state.amplitudes() {
        // signal: sqrt(T) a(ks) + i sqrt(R) b(ks)
        // idler:  i sqrt(R) a(ki) + sqrt(T) b(ki)
        let routes = [
            ((Port::A, *ks), trans),
            ((Port::B, *ks), refl),
        ];
        let idler_routes = [
            ((Port::A, *ki), refl),
            ((Port::B, *ki), trans),
        ];
        for (ms, cs) in routes {
            for (mi, ci) in idler_routes {
                *f.entry((ms, mi)).or_insert(Complex64::ZERO) += amp * cs * ci;
            }
        }
    }
    Ok(OutputAmplitudes { grid: *state.grid(), f })
}

const WINDOW_OVERLAP_FLAG: f64 = 1e-6;

fn window_overlap(u: &BTreeMap<OutMode, f64>, v: &BTreeMap<OutMode, f64>) -> f64 {
    u.iter()
        .filter_map(|(m, wu)| v.get(m).map(|wv| wu * wv))
        .sum()
}

/// Couple the beamsplitter output to the two collection fibers and their
/// mirror images, and classify the two-photon outcomes.
///
/// The declared pair (A at its center, B at its center) and the reflected
/// pair (both windows sent through k -> -k) form the two coincidence
/// channels; their sum is `p_cc`. The two windows sharing port a give the
/// bunching channel `p_aa`, likewise `p_bb`. A window centered on the origin
/// coincides with its own mirror image and is rejected, as are windows wide
/// enough to overlap their mirror twin.
pub fn couple_collection(
    output: &OutputAmplitudes,
    mode_a: &CollectionMode,
    mode_b: &CollectionMode,
    gamma: f64,
) -> Result<DetectionDistribution> {
    if mode_a.port == mode_b.port {
        return Err(Error::SamePortCollection);
    }
    if mode_a.center.is_origin() || mode_b.center.is_origin() {
        return Err(Error::SelfPairedWindow);
    }
    let grid = output.grid();
    let a1 = mode_a.weights(grid)?;
    let b1 = mode_b.weights(grid)?;
    let a2 = mode_a.reflected().weights(grid)?;
    let b2 = mode_b.reflected().weights(grid)?;
    for (u, v) in [(&a1, &a2), (&b1, &b2)] {
        let overlap = window_overlap(u, v);
        if overlap > WINDOW_OVERLAP_FLAG {
            return Err(Error::OverlappingWindows(overlap));
        }
    }
    let p_cc = output.fiber_pair_probability(&a1, &b1, gamma)
        + output.fiber_pair_probability(&a2, &b2, gamma);
    let p_aa = output.fiber_pair_probability(&a1, &a2, gamma);
    let p_bb = output.fiber_pair_probability(&b1, &b2, gamma);
    let residual = output.total_probability(gamma) - p_cc - p_aa - p_bb;
    Ok(DetectionDistribution { p_cc, p_aa, p_bb, residual })
}

/// The full two-arm interferometer: ordered element lists per arm, the
/// beamsplitter split, the collection pair, and the coherence model that
/// converts the arm delay difference into gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    grid: MomentumGrid,
    signal_arm: Vec<Element>,
    idler_arm: Vec<Element>,
    transmittance: f64,
    collection: (CollectionMode, CollectionMode),
    coherence: CoherenceModel,
}

impl Circuit {
    pub fn new(
        grid: MomentumGrid,
        signal_arm: Vec<Element>,
        idler_arm: Vec<Element>,
        transmittance: f64,
        collection: (CollectionMode, CollectionMode),
        coherence: CoherenceModel,
    ) -> Result<Self> {
        if !(transmittance > 0.0 && transmittance < 1.0) {
            return Err(Error::InvalidSplit(transmittance));
        }
        if collection.0.port == collection.1.port {
            return Err(Error::SamePortCollection);
        }
        Ok(Self {
            grid,
            signal_arm,
            idler_arm,
            transmittance,
            collection,
            coherence,
        })
    }

    /// The reference two-arm circuit: two mirrors per arm, a step mask
    /// of the given jump on the idler, a 50:50 split, and single-pixel
    /// collection at (a, +k0), (b, -k0).
    pub fn reference(grid: MomentumGrid, jump: f64, k0: MomentumLabel) -> Result<Self> {
        let mask = PhaseMask::step(grid, jump)?;
        Self::new(
            grid,
            vec![Element::Mirror, Element::Mirror],
            vec![
                Element::Mirror,
                Element::Mirror,
                Element::Mask(mask),
                Element::Delay(0.0),
            ],
            0.5,
            (
                CollectionMode::new(Port::A, k0, 0.0),
                CollectionMode::new(Port::B, k0.negated(), 0.0),
            ),
            CoherenceModel::default_filter(),
        )
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn reflectance(&self) -> f64 {
        1.0 - self.transmittance
    }

    pub fn coherence(&self) -> &CoherenceModel {
        &self.coherence
    }

    pub fn collection(&self) -> (&CollectionMode, &CollectionMode) {
        (&self.collection.0, &self.collection.1)
    }

    pub fn arm_elements(&self, arm: Arm) -> &[Element] {
        match arm {
            Arm::Signal => &self.signal_arm,
            Arm::Idler => &self.idler_arm,
        }
    }

    pub fn arm_elements_mut(&mut self, arm: Arm) -> &mut Vec<Element> {
        match arm {
            Arm::Signal => &mut self.signal_arm,
            Arm::Idler => &mut self.idler_arm,
        }
    }

    /// Replace the delay element on one arm (appending one if absent).
    pub fn set_arm_delay(&mut self, arm: Arm, delay: f64) {
        let elements = self.arm_elements_mut(arm);
        for e in elements.iter_mut() {
            if let Element::Delay(d) = e {
                *d = delay;
                return;
            }
        }
        elements.push(Element::Delay(delay));
    }

    /// Override the jump of the first step-style mask on one arm.
    pub fn set_arm_step_mask(&mut self, arm: Arm, jump: f64) -> Result<()> {
        let grid = self.grid;
        let elements = self.arm_elements_mut(arm);
        for e in elements.iter_mut() {
            if let Element::Mask(m) = e {
                *m = PhaseMask::step(grid, jump)?;
                return Ok(());
            }
        }
        elements.push(Element::Mask(PhaseMask::step(grid, jump)?));
        Ok(())
    }

    fn mirror_count(&self, arm: Arm) -> u32 {
        self.arm_elements(arm)
            .iter()
            .filter(|e| matches!(e, Element::Mirror))
            .count() as u32
    }
}

/// Mirror-count parities of the two arms and whether they agree. Photons
/// stay momentum anti-correlated at the beamsplitter only when they do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityReport {
    pub signal_parity: u8,
    pub idler_parity: u8,
    pub same_parity: bool,
}

pub fn reflection_parity(circuit: &Circuit) -> ParityReport {
    let s = (circuit.mirror_count(Arm::Signal) % 2) as u8;
    let i = (circuit.mirror_count(Arm::Idler) % 2) as u8;
    ParityReport {
        signal_parity: s,
        idler_parity: i,
        same_parity: s == i,
    }
}

fn propagate_arm(state: BiphotonState, arm: Arm, elements: &[Element]) -> Result<BiphotonState> {
    let mut s = state;
    for e in elements {
        s = match e {
            Element::Mirror => apply_mirror(&s, arm),
            Element::Mask(m) => apply_mask(&s, m, arm)?,
            Element::Delay(d) => set_delay(&s, arm, *d),
        };
    }
    Ok(s)
}

/// Propagate a source state through the circuit and detect at the fibers.
///
/// The source is sent through both arms' elements, post-selected on the
/// momentum pair {k0, -k0}, interfered at the beamsplitter with the
/// gamma set by the arm delay difference, and coupled to the collection
/// pair. The returned distribution is normalized over the post-selected
/// subspace; a dark result (zero captured probability) is flagged on the
/// distribution rather than treated as an error.
pub fn run(circuit: &Circuit, source: &BiphotonState, k0: MomentumLabel) -> Result<DetectionDistribution> {
    let state = propagate_arm(source.clone(), Arm::Signal, &circuit.signal_arm)?;
    let state = propagate_arm(state, Arm::Idler, &circuit.idler_arm)?;
    let conditioned = state.condition_on_pair(k0)?;
    let gamma = circuit
        .coherence
        .gamma(conditioned.arm(Arm::Idler).delay - conditioned.arm(Arm::Signal).delay);
    let output = apply_beamsplitter(&conditioned, circuit.transmittance, circuit.reflectance())?;
    couple_collection(&output, &circuit.collection.0, &circuit.collection.1, gamma)
}

/// Like [`run`], but with an explicit interference weight instead of the one
/// implied by the arm delays. Scans use this to fold an extra mode-overlap
/// factor into gamma; probabilities are linear in gamma, so the product is
/// exactly the usual contrast reduction.
pub fn run_with_gamma(
    circuit: &Circuit,
    source: &BiphotonState,
    k0: MomentumLabel,
    gamma: f64,
) -> Result<DetectionDistribution> {
    let state = propagate_arm(source.clone(), Arm::Signal, &circuit.signal_arm)?;
    let state = propagate_arm(state, Arm::Idler, &circuit.idler_arm)?;
    let conditioned = state.condition_on_pair(k0)?;
    let output = apply_beamsplitter(&conditioned, circuit.transmittance, circuit.reflectance())?;
    couple_collection(&output, &circuit.collection.0, &circuit.collection.1, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::TwoModeState;
    use std::f64::consts::PI;

    fn grid(n: usize) -> MomentumGrid {
        MomentumGrid::new(n, 1.0).unwrap()
    }

    fn k0() -> MomentumLabel {
        MomentumLabel::new(1, 0)
    }

    fn eq1_output(phi: f64, t: f64) -> OutputAmplitudes {
        let s = TwoModeState::with_phase(k0(), phi)
            .unwrap()
            .to_biphoton(grid(3))
            .unwrap();
        apply_beamsplitter(&s, t, 1.0 - t).unwrap()
    }

    #[test]
    fn symmetric_state_bunches() {
        let (cc, aa, bb) = eq1_output(0.0, 0.5).port_distribution(1.0);
        assert!(cc.abs() < 1e-12);
        assert!((aa - 0.5).abs() < 1e-12);
        assert!((bb - 0.5).abs() < 1e-12);
    }

    #[test]
    fn antisymmetric_state_antibunches() {
        let (cc, aa, bb) = eq1_output(PI, 0.5).port_distribution(1.0);
        assert!((cc - 1.0).abs() < 1e-12);
        assert!(aa.abs() < 1e-12);
        assert!(bb.abs() < 1e-12);
    }

    #[test]
    fn distinguishable_limit_is_classical() {
        // gamma = 0: cross-port probability T^2 + R^2 regardless of phi.
        for phi in [0.0, 0.4, PI / 2.0, 2.4, PI] {
            let (cc, aa, bb) = eq1_output(phi, 0.6).port_distribution(0.0);
            assert!((cc - 0.52).abs() < 1e-12, "phi = {phi}");
            assert!((aa - 0.24).abs() < 1e-12);
            assert!((bb - 0.24).abs() < 1e-12);
        }
    }

    #[test]
    fn output_probability_is_conserved() {
        for phi in [0.0, 1.0, PI] {
            for gamma in [0.0, 0.3, 1.0] {
                for t in [0.3, 0.5, 0.72] {
                    let total = eq1_output(phi, t).total_probability(gamma);
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn beamsplitter_rejects_bad_split() {
        let s = BiphotonState::spdc(grid(3));
        assert!(apply_beamsplitter(&s, 1.2, -0.2).is_err());
        assert!(apply_beamsplitter(&s, 0.6, 0.39).is_err());
        assert!(apply_beamsplitter(&s, 1.0, 0.0).is_err());
    }

    #[test]
    fn ideal_reference_circuit_reproduces_the_coincidence_law() {
        let g = grid(3);
        let source = BiphotonState::spdc(g);
        for (jump, expect_cc) in [(PI, 1.0), (0.0, 0.0)] {
            let circuit = Circuit::reference(g, jump, k0()).unwrap();
            let d = run(&circuit, &source, k0()).unwrap();
            assert!((d.p_cc - expect_cc).abs() < 1e-12, "jump = {jump}");
            assert!((d.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_mismatch_goes_dark() {
        let g = grid(3);
        let source = BiphotonState::spdc(g);
        let mut circuit = Circuit::reference(g, PI, k0()).unwrap();
        circuit.arm_elements_mut(Arm::Idler).push(Element::Mirror);
        assert!(!reflection_parity(&circuit).same_parity);
        for phi in [0.0, PI / 3.0, PI] {
            circuit.set_arm_step_mask(Arm::Idler, phi).unwrap();
            for delay in [0.0, 1e-4] {
                circuit.set_arm_delay(Arm::Idler, delay);
                let d = run(&circuit, &source, k0()).unwrap();
                assert!(d.p_cc.abs() < 1e-12);
                assert!(d.is_dark());
                assert!((d.sum() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_extra_mirrors_change_nothing() {
        let g = grid(3);
        let source = BiphotonState::spdc(g);
        let base = Circuit::reference(g, 1.1, k0()).unwrap();
        let d0 = run(&base, &source, k0()).unwrap();
        let mut more = base.clone();
        more.arm_elements_mut(Arm::Signal).push(Element::Mirror);
        more.arm_elements_mut(Arm::Signal).push(Element::Mirror);
        let d2 = run(&more, &source, k0()).unwrap();
        assert!((d0.p_cc - d2.p_cc).abs() < 1e-15);
        assert!((d0.p_aa - d2.p_aa).abs() < 1e-15);
        assert!((d0.p_bb - d2.p_bb).abs() < 1e-15);
        assert!(reflection_parity(&more).same_parity);
    }

    #[test]
    fn parity_report_counts_mirrors() {
        let g = grid(3);
        let c = Circuit::reference(g, 0.0, k0()).unwrap();
        let p = reflection_parity(&c);
        assert_eq!((p.signal_parity, p.idler_parity), (0, 0));
        assert!(p.same_parity);

        let mut c = c;
        c.arm_elements_mut(Arm::Idler).push(Element::Mirror);
        let p = reflection_parity(&c);
        assert_eq!((p.signal_parity, p.idler_parity), (0, 1));
        assert!(!p.same_parity);
    }

    #[test]
    fn collection_flags_degenerate_windows() {
        let out = eq1_output(0.0, 0.5);
        let origin = CollectionMode::new(Port::A, MomentumLabel::new(0, 0), 0.0);
        let b = CollectionMode::new(Port::B, k0().negated(), 0.0);
        assert!(matches!(
            couple_collection(&out, &origin, &b, 1.0),
            Err(Error::SelfPairedWindow)
        ));

        let a = CollectionMode::new(Port::A, k0(), 0.0);
        let same_port = CollectionMode::new(Port::A, k0().negated(), 0.0);
        assert!(matches!(
            couple_collection(&out, &a, &same_port, 1.0),
            Err(Error::SamePortCollection)
        ));

        // A window so wide it overlaps its own mirror image.
        let wide_a = CollectionMode::new(Port::A, k0(), 4.0);
        let wide_b = CollectionMode::new(Port::B, k0().negated(), 4.0);
        assert!(matches!(
            couple_collection(&out, &wide_a, &wide_b, 1.0),
            Err(Error::OverlappingWindows(_))
        ));
    }

    #[test]
    fn width_zero_collection_is_two_mode_post_selection() {
        // On the full source state the default pinhole pair captures exactly
        // the (k0, -k0) outcomes.
        let g = grid(5);
        let source = BiphotonState::spdc(g);
        let out = apply_beamsplitter(&source, 0.5, 0.5).unwrap();
        let a = CollectionMode::new(Port::A, k0(), 0.0);
        let b = CollectionMode::new(Port::B, k0().negated(), 0.0);
        let d = couple_collection(&out, &a, &b, 1.0).unwrap();
        // 25 pairs, 2 of them at +-k0, all bunching at phi = 0: the fibers
        // see the aa/bb share of those two pairs.
        assert!(d.p_cc.abs() < 1e-12);
        assert!((d.p_aa - 1.0 / 25.0).abs() < 1e-12);
        assert!((d.p_bb - 1.0 / 25.0).abs() < 1e-12);
        assert!((d.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn widened_windows_preserve_the_normalized_rate() {
        // Every pair (k, -k) inside the window contributes the same
        // 1 - gamma cos(phi), so the window width drops out of the
        // normalized coincidence rate.
        let g = grid(5);
        let source = BiphotonState::spdc(g);
        let mask = PhaseMask::step(g, 0.9).unwrap();
        let masked = apply_mask(&source, &mask, Arm::Idler).unwrap();
        let out = apply_beamsplitter(&masked, 0.5, 0.5).unwrap();
        let center = MomentumLabel::new(2, 0);
        for width in [0.0, 0.25, 0.4] {
            let a = CollectionMode::new(Port::A, center, width);
            let b = CollectionMode::new(Port::B, center.negated(), width);
            let gamma = 0.7;
            let d1 = couple_collection(&out, &a, &b, gamma).unwrap();
            let d0 = couple_collection(&out, &a, &b, 0.0).unwrap();
            let normalized = d1.p_cc / d0.p_cc;
            assert!(
                (normalized - (1.0 - gamma * 0.9f64.cos())).abs() < 1e-9,
                "width = {width}"
            );
        }
    }
}
