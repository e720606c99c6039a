//! Shared helpers for the simulator benchmarks.

use homsim_core::{BiphotonState, Circuit, CoherenceModel, MomentumGrid, MomentumLabel};

pub fn reference_circuit(n: usize, jump: f64) -> (Circuit, BiphotonState, MomentumLabel) {
    let grid = MomentumGrid::new(n, 1.0).expect("odd grid");
    let k0 = MomentumLabel::new(1, 0);
    let circuit = Circuit::reference(grid, jump, k0).expect("reference circuit");
    (circuit, BiphotonState::spdc(grid), k0)
}

pub fn delay_axis(points: usize) -> Vec<f64> {
    let lc = CoherenceModel::default_filter().coherence_length();
    let half = (points - 1) as f64 / 2.0;
    (0..points)
        .map(|i| (i as f64 - half) / half * 4.0 * lc)
        .collect()
}
