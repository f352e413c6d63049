//! Spectral fields: Fourier-coefficient storage plus the operations every
//! other module is built from.

use super::{fft2, ifft2, Grid2D};
use crate::error::{CoreError, Result};
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// A real or complex field on a periodic 2D grid, stored as Fourier series
/// coefficients `c(ξ)` with `f(x) = Σ_ξ c(ξ) e^{i x·ξ}` (row-major over the
/// full lattice in FFT order).
///
/// When `reality` is set the coefficients satisfy conjugate symmetry
/// `c(−ξ) = conj(c(ξ))`, which is enforced at construction and preserved by
/// every reality-preserving operation.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
    reality: bool,
}

impl SpectralField {
    /// The zero field.
    pub fn zeros(grid: Grid2D, reality: bool) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::default(); grid.n() * grid.n()],
            reality,
        }
    }

    /// Builds a field from raw coefficients. For real fields the conjugate
    /// symmetry is validated (1e−13 relative) and then enforced exactly.
    pub fn from_coeffs(grid: Grid2D, coeffs: Vec<Complex64>, reality: bool) -> Result<Self> {
        let n = grid.n();
        if coeffs.len() != n * n {
            return Err(CoreError::Validation(format!(
                "coefficient buffer has {} entries, expected {}",
                coeffs.len(),
                n * n
            )));
        }
        let mut f = SpectralField { grid, coeffs, reality };
        if reality {
            let max = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let asym = f.hermitian_asymmetry();
            if asym > 1e-13 * max.max(1e-300) {
                return Err(CoreError::Validation(format!(
                    "real field violates conjugate symmetry: asymmetry {asym:.3e}, max {max:.3e}"
                )));
            }
            f.hermitian_symmetrize();
        }
        Ok(f)
    }

    /// Samples a real-valued function on the physical grid (points
    /// `x = (box_length/n)·(i, j)`) and transforms to coefficients.
    pub fn from_physical_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let dx = grid.dx();
        let mut buf = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                buf[i * n + j] = Complex64::new(f(i as f64 * dx, j as f64 * dx), 0.0);
            }
        }
        Self::from_physical_complex(grid, buf, true)
    }

    /// Builds a field from physical samples; set `reality` when the samples
    /// are (numerically) real so the symmetry is enforced.
    pub fn from_physical_complex(grid: Grid2D, mut samples: Vec<Complex64>, reality: bool) -> Self {
        let n = grid.n();
        assert_eq!(samples.len(), n * n, "sample buffer size mismatch");
        fft2(&mut samples, n);
        let scale = 1.0 / (n * n) as f64;
        for c in samples.iter_mut() {
            *c *= scale;
        }
        let mut f = SpectralField { grid, coeffs: samples, reality };
        if reality {
            f.hermitian_symmetrize();
        }
        f
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn is_real(&self) -> bool {
        self.reality
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at storage indices `(i, j)`.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[i * self.grid.n() + j]
    }

    /// Coefficient at integer frequency offsets `(m1, m2)`.
    pub fn coeff_at_offset(&self, m1: i64, m2: i64) -> Complex64 {
        let i = self.grid.index_of(m1);
        let j = self.grid.index_of(m2);
        self.coeff(i, j)
    }

    pub fn set_coeff_at_offset(&mut self, m1: i64, m2: i64, v: Complex64) {
        let n = self.grid.n();
        let i = self.grid.index_of(m1);
        let j = self.grid.index_of(m2);
        self.coeffs[i * n + j] = v;
    }

    /// The mean value of the field (`c(0)`).
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Physical samples (complex).
    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut buf = self.coeffs.clone();
        ifft2(&mut buf, n);
        buf
    }

    /// Physical samples of a real field (imaginary parts discarded; they are
    /// zero to rounding by the symmetry invariant).
    pub fn to_physical_real(&self) -> Vec<f64> {
        self.to_physical_complex().iter().map(|c| c.re).collect()
    }

    /// `L²(box)` norm: `box_length · (Σ|c|²)^{1/2}` (Plancherel).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        self.grid.box_length() * s.sqrt()
    }

    /// Sup norm over the physical grid.
    pub fn sup_norm(&self) -> f64 {
        self.to_physical_complex()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `∫ f dx` over the box.
    pub fn integral(&self) -> Complex64 {
        let l = self.grid.box_length();
        self.coeffs[0] * (l * l)
    }

    /// Real `L²` inner product `∫ f g dx` of two real fields.
    pub fn inner_l2(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.grid, other.grid);
        let l2 = self.grid.box_length() * self.grid.box_length();
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum();
        l2 * s.re
    }

    /// Complex conjugate field (`ĉ(ξ) ↦ conj(c(−ξ))`).
    pub fn conj(&self) -> SpectralField {
        let n = self.grid.n();
        let mut out = SpectralField::zeros(self.grid, self.reality);
        for i in 0..n {
            let ic = (n - i) % n;
            for j in 0..n {
                let jc = (n - j) % n;
                out.coeffs[i * n + j] = self.coeffs[ic * n + jc].conj();
            }
        }
        out
    }

    /// Applies a coefficient-wise multiplier `m(ξ)`; the caller states
    /// whether the multiplier preserves reality (true for even real `m`).
    pub fn map_coeffs(
        &self,
        preserves_reality: bool,
        m: impl Fn([f64; 2], Complex64) -> Complex64,
    ) -> SpectralField {
        let n = self.grid.n();
        let mut out = self.clone();
        out.reality = self.reality && preserves_reality;
        for i in 0..n {
            for j in 0..n {
                let xi = self.grid.wavevector(i, j);
                out.coeffs[i * n + j] = m(xi, self.coeffs[i * n + j]);
            }
        }
        out
    }

    /// Multiplies coefficients by a real radial multiplier `m(|ξ|)`, with the
    /// value at `ξ = 0` supplied explicitly (removable-singularity rule).
    /// Preserves reality. Errors if a sample is non-finite, naming the point.
    pub fn apply_radial_multiplier(
        &self,
        m: impl Fn(f64) -> f64,
        at_zero: f64,
    ) -> Result<SpectralField> {
        let n = self.grid.n();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                let xi = self.grid.wavevector(i, j);
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                let v = if r == 0.0 { at_zero } else { m(r) };
                if !v.is_finite() {
                    return Err(CoreError::Validation(format!(
                        "radial multiplier non-finite at lattice point ({i}, {j}), |ξ| = {r:.6e}"
                    )));
                }
                out.coeffs[i * n + j] *= v;
            }
        }
        Ok(out)
    }

    /// Partial derivative along axis 0 or 1 (`iξ_a` multiplier, Nyquist row
    /// zeroed to preserve reality).
    pub fn derivative(&self, axis: usize) -> SpectralField {
        let n = self.grid.n();
        let ny = self.grid.nyquist_index();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                let idx = if axis == 0 { i } else { j };
                let v = if idx == ny {
                    Complex64::default()
                } else {
                    let xi = self.grid.freq(if axis == 0 { i } else { j });
                    Complex64::new(0.0, xi) * self.coeffs[i * n + j]
                };
                out.coeffs[i * n + j] = v;
            }
        }
        out
    }

    /// Gradient `[∂₁f, ∂₂f]`.
    pub fn gradient(&self) -> [SpectralField; 2] {
        [self.derivative(0), self.derivative(1)]
    }

    /// Laplacian (`−|ξ|²` multiplier; even, so the Nyquist row is kept).
    pub fn laplacian(&self) -> SpectralField {
        self.map_coeffs(true, |xi, c| {
            c * Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0)
        })
    }

    /// Pointwise product with 3/2-rule dealiasing: both inputs are padded to
    /// a `3n/2` grid, multiplied physically, and truncated back, so retained
    /// modes carry no aliasing error.
    pub fn mul_dealiased(&self, other: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, other.grid);
        let big = self.padded_physical();
        let mut prod = other.padded_physical();
        for (p, a) in prod.iter_mut().zip(&big) {
            *p *= a;
        }
        Self::from_padded_physical(self.grid, prod, self.reality && other.reality)
    }

    /// Physical samples on the padded `3n/2` grid (for dealiased algebra).
    pub(crate) fn padded_physical(&self) -> Vec<Complex64> {
        let n = self.grid.n();
        let m = 3 * n / 2;
        let mut big = vec![Complex64::default(); m * m];
        for i in 0..n {
            let mi = self.grid.offset(i);
            let bi = mi.rem_euclid(m as i64) as usize;
            for j in 0..n {
                let mj = self.grid.offset(j);
                let bj = mj.rem_euclid(m as i64) as usize;
                big[bi * m + bj] = self.coeffs[i * n + j];
            }
        }
        ifft2(&mut big, m);
        big
    }

    /// Inverse of [`padded_physical`]: forward transform on the padded grid,
    /// truncation to the representable band.
    pub(crate) fn from_padded_physical(
        grid: Grid2D,
        mut big: Vec<Complex64>,
        reality: bool,
    ) -> SpectralField {
        let n = grid.n();
        let m = 3 * n / 2;
        assert_eq!(big.len(), m * m);
        fft2(&mut big, m);
        let scale = 1.0 / (m * m) as f64;
        let mut out = SpectralField::zeros(grid, reality);
        let half = n as i64 / 2;
        for mi in -half..half {
            let bi = mi.rem_euclid(m as i64) as usize;
            let i = grid.index_of(mi);
            for mj in -half..half {
                let bj = mj.rem_euclid(m as i64) as usize;
                let j = grid.index_of(mj);
                out.coeffs[i * n + j] = big[bi * m + bj] * scale;
            }
        }
        if reality {
            out.hermitian_symmetrize();
        }
        out
    }

    /// Evaluates a pointwise function of several real fields on the padded
    /// grid and truncates back — the dealiased path for rational
    /// nonlinearities (curvature, strip coefficients, …).
    pub fn map_physical_padded(
        grid: Grid2D,
        inputs: &[&SpectralField],
        f: impl Fn(&[f64]) -> f64,
    ) -> SpectralField {
        let n = grid.n();
        let m = 3 * n / 2;
        let phys: Vec<Vec<Complex64>> = inputs.iter().map(|g| g.padded_physical()).collect();
        let mut out = vec![Complex64::default(); m * m];
        let mut vals = vec![0.0; inputs.len()];
        for p in 0..m * m {
            for (v, field) in vals.iter_mut().zip(&phys) {
                *v = field[p].re;
            }
            out[p] = Complex64::new(f(&vals), 0.0);
        }
        Self::from_padded_physical(grid, out, true)
    }

    /// Restriction to a coarser grid over the same physical box: keeps the
    /// modes `|m|_∞ ≤ n_sub/2 − 1` and drops the rest (including the
    /// subgrid's Nyquist row, so conjugate symmetry is preserved exactly).
    pub fn restrict_to(&self, sub: Grid2D) -> Result<SpectralField> {
        if sub.box_length() != self.grid.box_length() {
            return Err(CoreError::Validation(
                "restriction requires the same physical box".into(),
            ));
        }
        if sub.n() > self.grid.n() {
            return Err(CoreError::Validation(format!(
                "restriction target n = {} exceeds source n = {}",
                sub.n(),
                self.grid.n()
            )));
        }
        let n = self.grid.n();
        let ns = sub.n();
        let half = ns as i64 / 2;
        let mut out = SpectralField::zeros(sub, self.reality);
        for mi in -(half - 1)..half {
            for mj in -(half - 1)..half {
                let v = self.coeffs[self.grid.index_of(mi) * n + self.grid.index_of(mj)];
                out.coeffs[sub.index_of(mi) * ns + sub.index_of(mj)] = v;
            }
        }
        Ok(out)
    }

    /// Zero-padding prolongation to a finer grid over the same physical box.
    /// The source Nyquist row is dropped (it has no conjugate partner).
    pub fn prolong_to(&self, big: Grid2D) -> Result<SpectralField> {
        if big.box_length() != self.grid.box_length() {
            return Err(CoreError::Validation(
                "prolongation requires the same physical box".into(),
            ));
        }
        if big.n() < self.grid.n() {
            return Err(CoreError::Validation(format!(
                "prolongation target n = {} below source n = {}",
                big.n(),
                self.grid.n()
            )));
        }
        let n = self.grid.n();
        let nb = big.n();
        let half = n as i64 / 2;
        let mut out = SpectralField::zeros(big, self.reality);
        for mi in -(half - 1)..half {
            for mj in -(half - 1)..half {
                let v = self.coeffs[self.grid.index_of(mi) * n + self.grid.index_of(mj)];
                out.coeffs[big.index_of(mi) * nb + big.index_of(mj)] = v;
            }
        }
        Ok(out)
    }

    /// L² mass carried by modes with `|m|_∞ ≥ cutoff` (integer offsets),
    /// in the same normalization as [`Self::l2_norm`].
    pub fn tail_mass(&self, cutoff: i64) -> f64 {
        let n = self.grid.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m = self.grid.offset(i).abs().max(self.grid.offset(j).abs());
                if m >= cutoff {
                    s += self.coeffs[i * n + j].norm_sqr();
                }
            }
        }
        self.grid.box_length() * s.sqrt()
    }

    /// Max relative violation of `c(−ξ) = conj(c(ξ))`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let ic = (n - i) % n;
            for j in 0..n {
                let jc = (n - j) % n;
                let d = (self.coeffs[i * n + j] - self.coeffs[ic * n + jc].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Projects onto the conjugate-symmetric part.
    pub fn hermitian_symmetrize(&mut self) {
        let n = self.grid.n();
        for i in 0..n {
            let ic = (n - i) % n;
            for j in 0..n {
                let jc = (n - j) % n;
                if i * n + j <= ic * n + jc {
                    let a = self.coeffs[i * n + j];
                    let b = self.coeffs[ic * n + jc];
                    let sym = 0.5 * (a + b.conj());
                    self.coeffs[i * n + j] = sym;
                    self.coeffs[ic * n + jc] = sym.conj();
                }
            }
        }
        self.reality = true;
    }

    /// Splits a complex field into real fields `(Re f, Im f)`.
    pub fn real_imag_parts(&self) -> (SpectralField, SpectralField) {
        let conj = self.conj();
        let mut re = SpectralField::zeros(self.grid, true);
        let mut im = SpectralField::zeros(self.grid, true);
        for (idx, (a, b)) in self.coeffs.iter().zip(&conj.coeffs).enumerate() {
            re.coeffs[idx] = 0.5 * (a + b);
            im.coeffs[idx] = Complex64::new(0.0, -0.5) * (a - b);
        }
        re.hermitian_symmetrize();
        im.hermitian_symmetrize();
        (re, im)
    }

    /// Marks the field as complex (drops the reality invariant).
    pub fn into_complex(mut self) -> SpectralField {
        self.reality = false;
        self
    }

    /// Writes the snapshot format: a JSON header line
    /// `{"n":…, "box_length":…, "reality":…}` followed by one `re im` pair
    /// per coefficient, row-major over the full lattice, 17 significant
    /// digits.
    pub fn write_snapshot(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "{{\"n\":{},\"box_length\":{:.17e},\"reality\":{}}}",
            self.grid.n(),
            self.grid.box_length(),
            self.reality
        )?;
        for c in &self.coeffs {
            writeln!(w, "{:.17e} {:.17e}", c.re, c.im)?;
        }
        Ok(())
    }

    /// Reads the snapshot format written by [`write_snapshot`].
    pub fn read_snapshot(r: &mut impl BufRead) -> Result<SpectralField> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        let v: serde_json::Value = serde_json::from_str(header.trim())?;
        let n = v["n"].as_u64().ok_or_else(|| CoreError::Io("snapshot header missing n".into()))?
            as usize;
        let box_length = v["box_length"]
            .as_f64()
            .ok_or_else(|| CoreError::Io("snapshot header missing box_length".into()))?;
        let reality = v["reality"].as_bool().unwrap_or(false);
        let grid = Grid2D::new(n, box_length)?;
        let mut coeffs = Vec::with_capacity(n * n);
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let re: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CoreError::Io("snapshot: malformed coefficient line".into()))?;
            let im: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CoreError::Io("snapshot: malformed coefficient line".into()))?;
            coeffs.push(Complex64::new(re, im));
        }
        SpectralField::from_coeffs(grid, coeffs, reality)
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// True if any coefficient is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())
    }
}

impl std::ops::Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid);
        let mut out = self.clone();
        out.reality = self.reality && rhs.reality;
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid);
        let mut out = self.clone();
        out.reality = self.reality && rhs.reality;
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }
}

impl std::ops::Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        let mut out = rhs.clone();
        for c in out.coeffs.iter_mut() {
            *c *= self;
        }
        out
    }
}

impl std::ops::Mul<&SpectralField> for Complex64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        let mut out = rhs.clone();
        out.reality = false;
        for c in out.coeffs.iter_mut() {
            *c *= self;
        }
        out
    }
}
