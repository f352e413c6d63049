//! Littlewood–Paley dyadic cutoffs, the paraproduct cutoff θ, and spatial
//! localizers.
//!
//! The base bump `ψ̃ : R → [0,1]` is even and smooth, equal to 1 on
//! `[−5/4, 5/4]` and supported in `[−3/2, 3/2]`, built from the standard C∞
//! transition `e^{−1/s}/(e^{−1/s} + e^{−1/(1−s)})` rescaled to fall on
//! `[5/4, 3/2]`. Bands are `ψ_k(x) = ψ̃(x/2^k) − ψ̃(x/2^{k−1})` and
//! `ψ_{≤k}(x) = ψ̃(x/2^k)`.

use super::{Grid2D, SpectralField};
use crate::error::{CoreError, Result};

/// The C∞ step: 0 for `s ≤ 0`, 1 for `s ≥ 1`, strictly increasing between.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// The base bump `ψ̃`.
pub fn psi_tilde(x: f64) -> f64 {
    let t = x.abs();
    if t <= 1.25 {
        1.0
    } else if t >= 1.5 {
        0.0
    } else {
        1.0 - smooth_step((t - 1.25) * 4.0)
    }
}

/// Dyadic annulus profile `ψ_k`.
pub fn psi(k: i32, x: f64) -> f64 {
    psi_tilde(x * 2f64.powi(-k)) - psi_tilde(x * 2f64.powi(1 - k))
}

/// Low-pass profile `ψ_{≤k}`.
pub fn psi_leq(k: i32, x: f64) -> f64 {
    psi_tilde(x * 2f64.powi(-k))
}

/// High-pass profile `ψ_{≥k} = 1 − ψ_{≤k−1}`.
pub fn psi_geq(k: i32, x: f64) -> f64 {
    1.0 - psi_leq(k - 1, x)
}

/// The low/high paraproduct cutoff θ(a, b): equals 1 when `|a| ≤ 2^{−10}|b|`,
/// 0 when `|a| ≥ 2^{10}|b|`, and is smooth and monotone in
/// `log₂(|a|/|b|)` across `[−10, 10]` in between.
///
/// Conventions at degenerate inputs: `θ(a, 0) = 0` for every `a` (the
/// constant mode of the high-frequency slot is never produced) and
/// `θ(0, b) = 1` for `b ≠ 0`.
pub fn theta_cutoff(a: [f64; 2], b: [f64; 2]) -> f64 {
    theta_radial(vec_norm(a), vec_norm(b))
}

/// θ as a function of the two moduli.
pub fn theta_radial(p: f64, q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    let l = (p / q).log2();
    if l <= -10.0 {
        1.0
    } else if l >= 10.0 {
        0.0
    } else {
        1.0 - smooth_step((l + 10.0) / 20.0)
    }
}

/// The balanced remainder `θ̃(a, b) = 1 − θ(a, b) − θ(b, a)`.
pub fn theta_tilde(a: [f64; 2], b: [f64; 2]) -> f64 {
    1.0 - theta_cutoff(a, b) - theta_cutoff(b, a)
}

fn vec_norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

/// The dyadic band family attached to a grid.
///
/// Interior bands use `ψ_k`; the lowest residual is `ψ_{≤k_min−1}`; the top
/// band `k_max` is closing (it uses `ψ_{≥k_max}`) so that
/// `ψ_{≤k_min−1} + Σ_{k_min ≤ k ≤ k_max} band_k = 1` exactly at every lattice
/// radius, including the corner radii above `(5/4)·2^{k_max}`.
#[derive(Debug, Clone, Copy)]
pub struct DyadicCutoffs {
    k_min: i32,
    k_max: i32,
}

impl DyadicCutoffs {
    pub fn new(grid: Grid2D) -> Self {
        DyadicCutoffs {
            k_min: grid.k_min(),
            k_max: grid.k_max(),
        }
    }

    pub fn from_range(k_min: i32, k_max: i32) -> Self {
        assert!(k_min <= k_max);
        DyadicCutoffs { k_min, k_max }
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn bands(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }

    pub fn in_range(&self, k: i32) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    /// Weight of band `k` at radius `x` (closing convention at `k_max`).
    pub fn band_weight(&self, k: i32, x: f64) -> f64 {
        if k == self.k_max {
            psi_geq(self.k_max, x)
        } else {
            psi(k, x)
        }
    }

    /// Weight of the low residual `ψ_{≤k_min−1}`.
    pub fn low_residual_weight(&self, x: f64) -> f64 {
        psi_leq(self.k_min - 1, x)
    }

    /// Combined weight of bands `a..=b` (telescoping closed form).
    pub fn range_weight(&self, a: i32, b: i32, x: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let lo = psi_leq(a - 1, x);
        if b >= self.k_max {
            1.0 - lo
        } else {
            psi_leq(b, x) - lo
        }
    }

    /// Littlewood–Paley projection `P_k f`. Out-of-range `k` returns the zero
    /// field (empty band).
    pub fn lp_project(&self, f: &SpectralField, k: i32) -> SpectralField {
        if !self.in_range(k) {
            return SpectralField::zeros(f.grid(), f.is_real());
        }
        f.apply_radial_multiplier(|r| self.band_weight(k, r), self.band_weight(k, 0.0))
            .expect("band weights are finite")
    }

    /// Low projection `P_{≤k} f` (includes the zero mode).
    pub fn lp_project_low(&self, f: &SpectralField, k: i32) -> SpectralField {
        f.apply_radial_multiplier(|r| psi_leq(k, r), 1.0)
            .expect("band weights are finite")
    }

    /// Band-range projection `P_{[a,b]} f` with the closing convention.
    pub fn lp_project_range(&self, f: &SpectralField, a: i32, b: i32) -> SpectralField {
        f.apply_radial_multiplier(|r| self.range_weight(a, b, r), self.range_weight(a, b, 0.0))
            .expect("band weights are finite")
    }

    /// The spatial localizer profile `φ_j^k(|x|)`:
    ///
    /// * `ψ_{≤−k}` if `k + j = 0` and `k ≤ 0`,
    /// * `ψ_{≤0}`  if `j = 0` and `k ≥ 0`,
    /// * `ψ_j`     if `k + j ≥ 1` and `j ≥ 1`.
    pub fn spatial_profile(k: i32, j: i32, r: f64) -> f64 {
        if k + j == 0 && k <= 0 {
            psi_leq(-k, r)
        } else if j == 0 && k >= 0 {
            psi_leq(0, r)
        } else {
            psi(j, r)
        }
    }

    /// Spatially localized band piece
    /// `P_{[k−2,k+2]}[φ_j^k(x) · P_k f]` with box-centered coordinates.
    /// Summing over admissible `j ≥ −min(k, 0)` recovers
    /// `P_{[k−2,k+2]} P_k f`.
    pub fn spatial_localize(&self, f: &SpectralField, k: i32, j: i32) -> Result<SpectralField> {
        let j_floor = (-k).max(0);
        if j < j_floor {
            return Err(CoreError::Validation(format!(
                "spatial localizer index j = {j} below the floor {j_floor} for band k = {k}"
            )));
        }
        let pk = self.lp_project(f, k);
        let grid = f.grid();
        let n = grid.n();
        let mut phys = pk.to_physical_complex();
        for i in 0..n {
            let x0 = grid.centered_coord(i);
            for jj in 0..n {
                let x1 = grid.centered_coord(jj);
                let r = (x0 * x0 + x1 * x1).sqrt();
                phys[i * n + jj] *= Self::spatial_profile(k, j, r);
            }
        }
        let localized = SpectralField::from_physical_complex(grid, phys, f.is_real());
        Ok(self.lp_project_range(&localized, k - 2, k + 2))
    }

    /// Largest useful localizer index for a box: `⌈log₂ box_length⌉ + 2`
    /// (beyond it `φ_j^k` vanishes on the whole box).
    pub fn j_cap(grid: Grid2D) -> i32 {
        grid.box_length().log2().ceil() as i32 + 2
    }
}

/// Applies a radial physical-space window `w(|x|)` (box-centered) pointwise.
pub fn multiply_physical_radial(f: &SpectralField, w: impl Fn(f64) -> f64) -> SpectralField {
    let grid = f.grid();
    let n = grid.n();
    let mut phys = f.to_physical_complex();
    for i in 0..n {
        let x0 = grid.centered_coord(i);
        for j in 0..n {
            let x1 = grid.centered_coord(j);
            let r = (x0 * x0 + x1 * x1).sqrt();
            phys[i * n + j] *= w(r);
        }
    }
    SpectralField::from_physical_complex(grid, phys, f.is_real())
}
