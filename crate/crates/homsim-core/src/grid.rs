//! Discrete transverse-momentum grid.
//!
//! The continuous transverse momentum plane is sampled on an odd n x n pixel
//! grid centered on k = 0, so that every mode k has a distinct partner -k
//! except the origin. Momenta are dimensionless, in units of the down-conversion
//! cone radius; `k_max` is the half-extent of the sampled window.

use crate::error::{Error, Result};

/// Index label of one grid mode. `(0, 0)` is the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentumLabel {
    pub ix: i32,
    pub iy: i32,
}

impl MomentumLabel {
    pub const fn new(ix: i32, iy: i32) -> Self {
        Self { ix, iy }
    }

    /// The anti-correlated partner mode, k -> -k.
    pub const fn negated(self) -> Self {
        Self { ix: -self.ix, iy: -self.iy }
    }

    pub const fn is_origin(self) -> bool {
        self.ix == 0 && self.iy == 0
    }
}

impl std::fmt::Display for MomentumLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.ix, self.iy)
    }
}

/// Odd square sampling grid, closed under k -> -k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    n: usize,
    k_max: f64,
}

impl MomentumGrid {
    /// Build an n x n grid with half-extent `k_max`. `n` must be odd and >= 3
    /// so the grid contains the origin and is symmetric about it.
    pub fn new(n: usize, k_max: f64) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::EvenGrid(n));
        }
        if !(k_max > 0.0) || !k_max.is_finite() {
            return Err(Error::InvalidKMax(k_max));
        }
        Ok(Self { n, k_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    /// Pixels per half axis; labels run over [-half, half].
    pub fn half(&self) -> i32 {
        ((self.n - 1) / 2) as i32
    }

    /// Total number of modes, n^2.
    pub fn mode_count(&self) -> usize {
        self.n * self.n
    }

    pub fn contains(&self, label: MomentumLabel) -> bool {
        let h = self.half();
        label.ix.abs() <= h && label.iy.abs() <= h
    }

    /// Physical momentum of a label, in cone-radius units.
    pub fn k_of(&self, label: MomentumLabel) -> (f64, f64) {
        let h = self.half() as f64;
        (
            label.ix as f64 / h * self.k_max,
            label.iy as f64 / h * self.k_max,
        )
    }

    /// Row-major flat index of a label (rows scan iy, columns ix).
    pub fn index_of(&self, label: MomentumLabel) -> Result<usize> {
        if !self.contains(label) {
            return Err(Error::LabelOutOfGrid(label.ix, label.iy));
        }
        let h = self.half();
        let row = (label.iy + h) as usize;
        let col = (label.ix + h) as usize;
        Ok(row * self.n + col)
    }

    /// All labels in row-major order.
    pub fn labels(&self) -> impl Iterator<Item = MomentumLabel> + '_ {
        let h = self.half();
        (-h..=h).flat_map(move |iy| (-h..=h).map(move |ix| MomentumLabel::new(ix, iy)))
    }

    /// Labels of the positive half-plane: ix > 0, plus the half line
    /// ix = 0, iy > 0. Each pair {k, -k} appears exactly once; the origin
    /// is excluded.
    pub fn half_plane(&self) -> impl Iterator<Item = MomentumLabel> + '_ {
        self.labels()
            .filter(|l| l.ix > 0 || (l.ix == 0 && l.iy > 0))
    }
}
