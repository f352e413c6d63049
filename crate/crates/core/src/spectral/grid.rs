//! The periodic grid and its wavenumber lattice.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// A square periodic grid: `n × n` points on a box of physical side
/// `box_length` per axis.
///
/// Wavenumbers are `ξ_i = (2π/box_length)·m_i` with integer offsets
/// `m_i ∈ {0, 1, …, n/2−1, −n/2, …, −1}` in FFT storage order. The Nyquist
/// row `m = −n/2` has no conjugate partner and is zeroed by every odd
/// multiplier so real fields stay real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    box_length: f64,
}

impl Grid2D {
    /// Builds a grid; `n` must be a power of two ≥ 4 and `box_length > 0`.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(CoreError::Validation(format!(
                "grid size must be a power of two >= 4, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(CoreError::Validation(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Grid2D { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Physical grid spacing.
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Wavenumber spacing `2π/box_length`.
    pub fn dxi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Integer frequency offset for storage index `i` (Nyquist maps to `−n/2`).
    pub fn offset(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Scalar wavenumber component for storage index `i`.
    pub fn freq(&self, i: usize) -> f64 {
        self.offset(i) as f64 * self.dxi()
    }

    /// Wavevector at storage indices `(i, j)` = (row, column) = (ξ₁, ξ₂).
    pub fn wavevector(&self, i: usize, j: usize) -> [f64; 2] {
        [self.freq(i), self.freq(j)]
    }

    /// Storage index of the Nyquist row.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest axis wavenumber magnitude (the Nyquist frequency).
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / 2.0 * self.dxi()
    }

    /// Storage index holding integer offset `m` (requires `−n/2 ≤ m < n/2`).
    pub fn index_of(&self, m: i64) -> usize {
        let half = self.n as i64 / 2;
        debug_assert!(m >= -half && m < half);
        m.rem_euclid(self.n as i64) as usize
    }

    /// Smallest dyadic band index carried by the grid:
    /// `⌈log₂(2π/box_length)⌉ − 2`; lower bands fold into `ψ_{≤k_min−1}`.
    pub fn k_min(&self) -> i32 {
        (self.dxi().log2().ceil() as i32) - 2
    }

    /// Largest dyadic band index: `log₂(Nyquist) − 1`; the top band closes
    /// the partition (it carries everything above as well).
    pub fn k_max(&self) -> i32 {
        self.nyquist().log2().floor() as i32 - 1
    }

    /// Box-centered physical coordinate for storage index `i`, in
    /// `[−box_length/2, box_length/2)`.
    pub fn centered_coord(&self, i: usize) -> f64 {
        let x = i as f64 * self.dx();
        if x < self.box_length / 2.0 {
            x
        } else {
            x - self.box_length
        }
    }
}
