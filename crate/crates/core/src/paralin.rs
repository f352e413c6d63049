//! Paraproducts, the good unknown, symmetrization symbols, and the
//! symmetrized energy monitor.
//!
//! Pseudo-differential symbols are represented as finite sums
//! `a(x, ξ) = Σ_j c_j(x)·m_j(ξ)` ([`XDependentSymbol`]). The symmetrization
//! symbols are assembled in first-order expansion in `(h, ∇h, ∇²h)`,
//! consistent with the `O(ε²)` residual targets of the paralinearized
//! system; the exact nonlinear symmetrizer is available separately
//! ([`gamma_exact`]) for linearization-identity checks.
//!
//! The closed-form symbols are deep-water asymptotics: their flat-state
//! values (`|ξ|`, `|ξ|²`, `|ξ|^{1/2}`, …) match the finite-depth operators
//! only where `tanh|ξ| ≈ 1`. Residual tests must therefore place the data
//! at lattice frequencies `|ξ| ≳ 8`, where the depth correction
//! `1 − tanh|ξ|` sits below the quadratic residual floor. The energy
//! monitor itself uses the exact finite-depth weight
//! `Λ̃ = (|ξ|/tanh|ξ|)^{1/2}`, so its quadratic-order conservation is
//! exact at every frequency.

use num_complex::Complex64;
use std::sync::Arc;

use crate::dno::{DnoBackend, DnoSolver};
use crate::error::{CoreError, Result};
use crate::evolution::{apply_bilinear, BilinearSymbol, MultiplierFn, SurfaceState};
use crate::spectral::{Grid2D, SpectralField};

/// Desk-scale default for the Sobolev index `N₀` of the energy weight `β`.
pub const N0_DESK_DEFAULT: usize = 8;

/// One `c_j(x)·m_j(ξ)` term of an x-dependent symbol.
pub struct SymbolTerm {
    pub coeff: SpectralField,
    pub multiplier: MultiplierFn,
}

/// A symbol `a(x, ξ) = Σ_j c_j(x)·m_j(ξ)`; the sum is exact for every
/// symbol housed here (the coefficients are polynomial in derivatives of
/// `h` at the configured expansion order).
pub struct XDependentSymbol {
    pub terms: Vec<SymbolTerm>,
}

fn unit_field(grid: Grid2D) -> SpectralField {
    let mut f = SpectralField::zeros(grid, true);
    f.set_coeff_at_offset(0, 0, Complex64::new(1.0, 0.0));
    f
}

fn real_mult(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> MultiplierFn {
    Arc::new(move |xi| Complex64::new(f(xi), 0.0))
}

/// Real part of a field whose imaginary content is numerical noise.
fn realify(f: &SpectralField) -> SpectralField {
    f.real_imag_parts().0
}

impl XDependentSymbol {
    /// An x-independent symbol `m(ξ)`.
    pub fn constant(grid: Grid2D, multiplier: MultiplierFn) -> Self {
        XDependentSymbol {
            terms: vec![SymbolTerm {
                coeff: unit_field(grid),
                multiplier,
            }],
        }
    }

    /// The coefficient field `x ↦ a(x, ξ)` at a fixed frequency.
    pub fn eval(&self, grid: Grid2D, xi: [f64; 2]) -> SpectralField {
        let mut out = SpectralField::zeros(grid, false);
        for t in &self.terms {
            let m = (t.multiplier)(xi);
            out = &out + &t.coeff.map_coeffs(false, |_, c| m * c);
        }
        out
    }

    /// `T_a f` for the x-dependent symbol: each term contributes the
    /// low-high paraproduct of its coefficient with `m_j(D) f` (the
    /// multiplier acts at the high input frequency).
    pub fn paraproduct(&self, f: &SpectralField) -> Result<SpectralField> {
        let theta = BilinearSymbol::theta_low_high();
        let mut out = SpectralField::zeros(f.grid(), false);
        for t in &self.terms {
            let mf = {
                let m = Arc::clone(&t.multiplier);
                f.map_coeffs(false, move |xi, c| m(xi) * c)
            };
            out = &out + &apply_bilinear(&theta, &t.coeff, &mf)?;
        }
        Ok(out)
    }
}

/// Plain low-high paraproduct `T_a f` with the θ cutoff; the constant mode
/// of `f` is never produced (`θ(·, 0) = 0`), so `T_a(const) = 0` and
/// `T_1 f = f` for mean-zero `f`.
pub fn paraproduct(a: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
    apply_bilinear(&BilinearSymbol::theta_low_high(), a, f)
}

/// The good-unknown triple of the Dirichlet–Neumann paralinearization.
pub struct GoodUnknown {
    /// `B = (G(h)ψ + ∇h·∇ψ)/(1 + |∇h|²)`.
    pub b: SpectralField,
    /// `V = ∇ψ − B∇h`.
    pub v: [SpectralField; 2],
    /// `ω = ψ − T_B h`.
    pub omega: SpectralField,
    /// `G(h)ψ` as computed by the chosen backend.
    pub dno: SpectralField,
}

/// Computes `(B, V, ω)` for a surface state. Backend failures (amplitude
/// bound, divergence) propagate.
pub fn good_unknown(
    state: &SurfaceState,
    solver: &DnoSolver,
    backend: &DnoBackend,
) -> Result<GoodUnknown> {
    let g = solver.dno_apply(&state.h, &state.psi, backend)?;
    let hx = state.h.derivative(0);
    let hy = state.h.derivative(1);
    let px = state.psi.derivative(0);
    let py = state.psi.derivative(1);
    let b = SpectralField::map_physical_padded(state.grid(), &[&g, &hx, &hy, &px, &py], |v| {
        (v[0] + v[1] * v[3] + v[2] * v[4]) / (1.0 + v[1] * v[1] + v[2] * v[2])
    });
    let vx = &px - &b.mul_dealiased(&hx);
    let vy = &py - &b.mul_dealiased(&hy);
    let omega = &state.psi - &realify(&paraproduct(&b, &state.h)?);
    Ok(GoodUnknown {
        b,
        v: [vx, vy],
        omega,
        dno: g,
    })
}

/// The symmetrization symbol family, expanded to first order in
/// `(h, ∇h, ∇²h)`:
///
/// - `λ = |ξ| + ½(Δh − ξ̂ᵀ(∇²h)ξ̂)` (principal + sub-principal DNO symbol),
/// - `l = |ξ|²` (the sub-principal curvature symbol vanishes at first order),
/// - `p = |ξ|^{1/2} − (Δh − ξ̂ᵀ(∇²h)ξ̂)/(4|ξ|^{1/2})`,
/// - `q = 1`,
/// - `γ = |ξ|^{1/2}(Δh − ξ̂ᵀ(∇²h)ξ̂)/4`,
/// - `β = (2|ξ|^{3/2})^{2N₀/3}`.
pub struct SymmetrizationSymbols {
    pub lambda: XDependentSymbol,
    pub l: XDependentSymbol,
    pub p: XDependentSymbol,
    pub q: XDependentSymbol,
    pub gamma: XDependentSymbol,
    pub beta: XDependentSymbol,
    pub n0: usize,
}

fn unit_dir(xi: [f64; 2]) -> Option<[f64; 2]> {
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        None
    } else {
        Some([xi[0] / r, xi[1] / r])
    }
}

/// `½(Δh − ξ̂ᵀ(∇²h)ξ̂)` as symbol terms: coefficient fields `(h₁₁, h₂₂, h₁₂)`
/// with multipliers `scale(ξ)·(ξ̂₂², ξ̂₁², −2ξ̂₁ξ̂₂)/2`.
fn hessian_trace_terms(
    h11: &SpectralField,
    h22: &SpectralField,
    h12: &SpectralField,
    scale: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
) -> Vec<SymbolTerm> {
    let m11 = real_mult(move |xi| match unit_dir(xi) {
        Some(u) => scale(xi[0].hypot(xi[1])) * 0.5 * u[1] * u[1],
        None => 0.0,
    });
    let m22 = real_mult(move |xi| match unit_dir(xi) {
        Some(u) => scale(xi[0].hypot(xi[1])) * 0.5 * u[0] * u[0],
        None => 0.0,
    });
    let m12 = real_mult(move |xi| match unit_dir(xi) {
        Some(u) => -scale(xi[0].hypot(xi[1])) * u[0] * u[1],
        None => 0.0,
    });
    vec![
        SymbolTerm {
            coeff: h11.clone(),
            multiplier: m11,
        },
        SymbolTerm {
            coeff: h22.clone(),
            multiplier: m22,
        },
        SymbolTerm {
            coeff: h12.clone(),
            multiplier: m12,
        },
    ]
}

/// Assembles the symmetrization symbols for a state. `n0` is the
/// desk-scale Sobolev index of `β`, accepted in `[6, 12]`.
pub fn symmetrization_symbols(state: &SurfaceState, n0: usize) -> Result<SymmetrizationSymbols> {
    if !(6..=12).contains(&n0) {
        return Err(CoreError::Validation(format!(
            "desk-scale N₀ must lie in [6, 12], got {n0}"
        )));
    }
    let grid = state.grid();
    let h11 = state.h.derivative(0).derivative(0);
    let h22 = state.h.derivative(1).derivative(1);
    let h12 = state.h.derivative(0).derivative(1);

    let mut lambda_terms = vec![SymbolTerm {
        coeff: unit_field(grid),
        multiplier: real_mult(|xi| xi[0].hypot(xi[1])),
    }];
    lambda_terms.extend(hessian_trace_terms(&h11, &h22, &h12, |_| 1.0));

    let l = XDependentSymbol::constant(grid, real_mult(|xi| {
        let r = xi[0].hypot(xi[1]);
        r * r
    }));

    let mut p_terms = vec![SymbolTerm {
        coeff: unit_field(grid),
        multiplier: real_mult(|xi| xi[0].hypot(xi[1]).sqrt()),
    }];
    p_terms.extend(hessian_trace_terms(&h11, &h22, &h12, |r| {
        -0.5 / r.sqrt()
    }));

    let q = XDependentSymbol::constant(grid, real_mult(|_| 1.0));

    let gamma = XDependentSymbol {
        terms: hessian_trace_terms(&h11, &h22, &h12, |r| 0.5 * r.sqrt()),
    };

    let exponent = 2.0 * n0 as f64 / 3.0;
    let beta = XDependentSymbol::constant(
        grid,
        real_mult(move |xi| {
            let r = xi[0].hypot(xi[1]);
            (2.0 * r.powf(1.5)).powf(exponent)
        }),
    );

    Ok(SymmetrizationSymbols {
        lambda: XDependentSymbol {
            terms: lambda_terms,
        },
        l,
        p: XDependentSymbol { terms: p_terms },
        q,
        gamma,
        beta,
        n0,
    })
}

/// Exact mean curvature `H(h) = ∇·(∇h/√(1+|∇h|²))`.
pub fn mean_curvature(h: &SpectralField) -> SpectralField {
    let hx = h.derivative(0);
    let hy = h.derivative(1);
    let gx = SpectralField::map_physical_padded(h.grid(), &[&hx, &hy], |v| {
        v[0] / (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt()
    });
    let gy = SpectralField::map_physical_padded(h.grid(), &[&hx, &hy], |v| {
        v[1] / (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt()
    });
    &gx.derivative(0) + &gy.derivative(1)
}

// ---------------------------------------------------------------------------
// Exact (nonlinear) symmetrizer evaluation
// ---------------------------------------------------------------------------

fn phys(f: &SpectralField) -> Vec<Complex64> {
    f.to_physical_complex()
}

fn field_from(grid: Grid2D, samples: Vec<Complex64>) -> SpectralField {
    SpectralField::from_physical_complex(grid, samples, false)
}

fn derivative_phys(grid: Grid2D, samples: &[Complex64], axis: usize) -> Vec<Complex64> {
    field_from(grid, samples.to_vec()).derivative(axis).to_physical_complex()
}

struct SymbolPointwise {
    lambda1: Vec<f64>,
    l2: Vec<f64>,
    /// `γ^{(3/2)} = √(l^{(2)} λ^{(1)})`.
    gamma32: Vec<f64>,
}

fn pointwise_principal(h: &SpectralField, xi: [f64; 2]) -> SymbolPointwise {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    let s1 = phys(&h.derivative(0));
    let s2 = phys(&h.derivative(1));
    let n = s1.len();
    let mut lambda1 = Vec::with_capacity(n);
    let mut l2 = Vec::with_capacity(n);
    let mut gamma32 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (s1[i].re, s2[i].re);
        let m2 = 1.0 + a * a + b * b;
        let dot = a * xi[0] + b * xi[1];
        let lam = (m2 * r2 - dot * dot).sqrt();
        let l = (r2 - dot * dot / m2) / m2.sqrt();
        lambda1.push(lam);
        l2.push(l);
        gamma32.push((l * lam).sqrt());
    }
    SymbolPointwise {
        lambda1,
        l2,
        gamma32,
    }
}

/// Exact sub-principal DNO symbol
/// `λ^{(0)} = (1+|∇h|²)/(2λ^{(1)}) [∇·(a∇h) + i ∇_ξλ^{(1)}·∇_x a]`,
/// `a = (λ^{(1)} + i∇h·ξ)/(1+|∇h|²)`, evaluated pointwise at a fixed `ξ`.
pub fn lambda0_exact(h: &SpectralField, xi: [f64; 2]) -> SpectralField {
    let grid = h.grid();
    let s1 = phys(&h.derivative(0));
    let s2 = phys(&h.derivative(1));
    let pw = pointwise_principal(h, xi);
    let n = s1.len();
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        let dot = s1[i].re * xi[0] + s2[i].re * xi[1];
        let m2 = 1.0 + s1[i].re * s1[i].re + s2[i].re * s2[i].re;
        a.push(Complex64::new(pw.lambda1[i], dot) / m2);
    }
    let ah1: Vec<Complex64> = (0..n).map(|i| a[i] * s1[i].re).collect();
    let ah2: Vec<Complex64> = (0..n).map(|i| a[i] * s2[i].re).collect();
    let div1 = derivative_phys(grid, &ah1, 0);
    let div2 = derivative_phys(grid, &ah2, 1);
    let da1 = derivative_phys(grid, &a, 0);
    let da2 = derivative_phys(grid, &a, 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (p, q) = (s1[i].re, s2[i].re);
        let m2 = 1.0 + p * p + q * q;
        let dot = p * xi[0] + q * xi[1];
        let lam = pw.lambda1[i];
        // ∇_ξ λ^{(1)} = ((1+|∇h|²)ξ − (∇h·ξ)∇h)/λ^{(1)}.
        let g1 = (m2 * xi[0] - dot * p) / lam;
        let g2 = (m2 * xi[1] - dot * q) / lam;
        let term = div1[i] + div2[i] + Complex64::i() * (g1 * da1[i] + g2 * da2[i]);
        out.push(term * m2 / (2.0 * lam));
    }
    field_from(grid, out)
}

fn gamma32_field(h: &SpectralField, xi: [f64; 2]) -> SpectralField {
    let pw = pointwise_principal(h, xi);
    field_from(
        h.grid(),
        pw.gamma32.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )
}

/// Exact nonlinear symmetrizer
/// `γ(x, ξ) = √(l^{(2)}λ^{(1)}) + √(l^{(2)}/λ^{(1)})·Re λ^{(0)}/2
///  − (i/2)(∇_ξ·∇_x)√(l^{(2)}λ^{(1)}) − |ξ|^{3/2}`
/// as a complex field over `x`. The mixed `∇_ξ·∇_x` term uses a centered
/// finite difference in `ξ` of the spectral `x`-derivative.
pub fn gamma_exact(h: &SpectralField, xi: [f64; 2]) -> SpectralField {
    let grid = h.grid();
    let pw = pointwise_principal(h, xi);
    let lam0 = phys(&lambda0_exact(h, xi));
    let r = xi[0].hypot(xi[1]);
    let n = pw.lambda1.len();

    // (∇_ξ·∇_x)√(l^{(2)}λ^{(1)}): FD step relative to |ξ|.
    let delta = 1e-4 * r.max(1.0);
    let mut mixed = vec![Complex64::default(); n];
    for axis in 0..2 {
        let mut xp = xi;
        let mut xm = xi;
        xp[axis] += delta;
        xm[axis] -= delta;
        let dp = phys(&gamma32_field(h, xp).derivative(axis));
        let dm = phys(&gamma32_field(h, xm).derivative(axis));
        for i in 0..n {
            mixed[i] += (dp[i] - dm[i]) / (2.0 * delta);
        }
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let ratio = (pw.l2[i] / pw.lambda1[i]).sqrt();
        let v = Complex64::new(pw.gamma32[i] - r.powf(1.5) + ratio * lam0[i].re / 2.0, 0.0)
            - Complex64::i() * 0.5 * mixed[i];
        out.push(v);
    }
    field_from(grid, out)
}

// ---------------------------------------------------------------------------
// Symmetrized energy
// ---------------------------------------------------------------------------

/// The symmetrized energy and its good variables.
pub struct EnergyReport {
    /// `E = ‖U₁‖² + ‖U₂‖² + ‖T_β U₁‖² + ‖T_β U₂‖²`.
    pub energy: f64,
    pub u1: SpectralField,
    pub u2: SpectralField,
    pub u1_high: SpectralField,
    pub u2_high: SpectralField,
    pub n0: usize,
}

/// `U₁ = Λ̃(h + T_{p|ξ|^{−1/2}−1}h)`, `U₂ = ω + T_{q−1}ω`, with the energy
/// `E = ‖U₁‖² + ‖U₂‖² + ‖T_βU₁‖² + ‖T_βU₂‖²`. At the configured expansion
/// order `q − 1` vanishes, so `U₂ = ω`; `Λ̃ = (|ξ|/tanh|ξ|)^{1/2}` is kept
/// in exact finite-depth form.
pub fn symmetrized_energy(
    state: &SurfaceState,
    solver: &DnoSolver,
    backend: &DnoBackend,
    n0: usize,
) -> Result<EnergyReport> {
    let grid = state.grid();
    let syms = symmetrization_symbols(state, n0)?;
    let gu = good_unknown(state, solver, backend)?;

    // p·|ξ|^{−1/2} − 1: the principal term cancels, leaving the first-order
    // coefficients of p scaled by |ξ|^{−1/2}.
    let h11 = state.h.derivative(0).derivative(0);
    let h22 = state.h.derivative(1).derivative(1);
    let h12 = state.h.derivative(0).derivative(1);
    let corr = XDependentSymbol {
        terms: hessian_trace_terms(&h11, &h22, &h12, |r| -0.5 / r),
    };
    let h_corr = &state.h + &realify(&corr.paraproduct(&state.h)?);
    let u1 = h_corr
        .apply_radial_multiplier(|r| (r / r.tanh()).sqrt(), 1.0)
        .expect("Λ̃ multiplier is finite on the lattice");
    let u2 = gu.omega.clone();
    let u1_high = realify(&syms.beta.paraproduct(&u1)?);
    let u2_high = realify(&syms.beta.paraproduct(&u2)?);
    let energy = u1.l2_norm().powi(2)
        + u2.l2_norm().powi(2)
        + u1_high.l2_norm().powi(2)
        + u2_high.l2_norm().powi(2);
    let _ = grid;
    Ok(EnergyReport {
        energy,
        u1,
        u2,
        u1_high,
        u2_high,
        n0,
    })
}

/// Inverts the good-variable map: finds a surface state `(h, ψ)` whose
/// symmetrized variables equal the given mean-zero targets `(U₁*, U₂*)`.
///
/// Both defining relations are identity-plus-quadratic, so plain Picard
/// iteration contracts at small amplitude: `h = Λ̃⁻¹U₁* − T_corr h` and
/// `ψ = U₂* + T_B h`. States prepared this way carry no quadratic
/// dressing in `(U₁, U₂)` at `t = 0`, which matters for drift
/// measurements: the `β` weight amplifies harmonic content by `2^{N₀}`
/// per octave, and the dressing's instantaneous exchange rate (an ε⁴
/// term carrying that amplification squared) otherwise swamps the ε³
/// drift at desk amplitudes.
pub fn prepare_state(
    u1_target: &SpectralField,
    u2_target: &SpectralField,
    solver: &DnoSolver,
    backend: &DnoBackend,
) -> Result<SurfaceState> {
    let h_star = u1_target
        .apply_radial_multiplier(|r| (r.tanh() / r).sqrt(), 1.0)
        .expect("Λ̃⁻¹ multiplier is finite on the lattice");
    let mut h = h_star.clone();
    for _ in 0..6 {
        let h11 = h.derivative(0).derivative(0);
        let h22 = h.derivative(1).derivative(1);
        let h12 = h.derivative(0).derivative(1);
        let corr = XDependentSymbol {
            terms: hessian_trace_terms(&h11, &h22, &h12, |r| -0.5 / r),
        };
        h = &h_star - &realify(&corr.paraproduct(&h)?);
    }
    let mut psi = u2_target.clone();
    for _ in 0..6 {
        let state = SurfaceState::new(h.clone(), psi.clone(), 0.0)?;
        let gu = good_unknown(&state, solver, backend)?;
        psi = u2_target + &realify(&paraproduct(&gu.b, &h)?);
    }
    SurfaceState::new(h, psi, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::slope_fit;
    use crate::spectral::Grid2D;

    fn grid(n: usize, len: f64) -> Grid2D {
        Grid2D::new(n, len).unwrap()
    }

    /// Mean-zero real field from a list of `(m1, m2, amplitude, phase)` modes.
    fn trig(g: Grid2D, modes: &[(f64, f64, f64, f64)]) -> SpectralField {
        SpectralField::from_physical_fn(g, |x, y| {
            modes
                .iter()
                .map(|&(m1, m2, a, ph)| a * (m1 * x + m2 * y + ph).cos())
                .sum()
        })
    }

    fn rel_l2(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).l2_norm() / b.l2_norm()
    }

    #[test]
    fn paraproduct_identity_linearity_and_constant_rules() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let f = trig(g, &[(3.0, 0.0, 1.0, 0.3), (1.0, 2.0, 0.7, 1.1)]);
        let one = unit_field(g);
        // T_1 f = f for mean-zero f.
        let t1f = paraproduct(&one, &f).unwrap();
        assert!(rel_l2(&t1f, &f) < 1e-12);
        // T_a(const) = 0 for mean-zero a.
        let c = 2.5 * &unit_field(g);
        let tac = paraproduct(&f, &c).unwrap();
        assert!(tac.l2_norm() < 1e-14);
        // Bony linearity.
        let a = trig(g, &[(1.0, 0.0, 0.4, 0.0)]);
        let b = trig(g, &[(0.0, 2.0, 0.6, 0.5)]);
        let lhs = paraproduct(&(&a + &b), &f).unwrap();
        let rhs = &paraproduct(&a, &f).unwrap() + &paraproduct(&b, &f).unwrap();
        assert!((&lhs - &rhs).l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn good_unknown_flat_state_oracle() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let solver = DnoSolver::new(g, 24).unwrap();
        let psi = trig(g, &[(1.0, 0.0, 1.0, 0.0)]);
        let state = SurfaceState::new(SpectralField::zeros(g, true), psi.clone(), 0.0).unwrap();
        let backend = DnoBackend::FixedPoint {
            tol: 1e-13,
            max_iter: 200,
        };
        let gu = good_unknown(&state, &solver, &backend).unwrap();
        // h ≡ 0: B = G(0)ψ = tanh(1)·cos x₁, V = ∇ψ, ω = ψ.
        let b_expect = trig(g, &[(1.0, 0.0, 1.0_f64.tanh(), 0.0)]);
        assert!(rel_l2(&gu.b, &b_expect) < 1e-10);
        assert!((&gu.v[0] - &psi.derivative(0)).l2_norm() < 1e-10);
        assert!(gu.v[1].l2_norm() < 1e-10);
        assert!(rel_l2(&gu.omega, &psi) < 1e-12);

        let zero = SurfaceState::zero(g);
        let gz = good_unknown(&zero, &solver, &backend).unwrap();
        assert_eq!(gz.b.l2_norm(), 0.0);
        assert_eq!(gz.omega.l2_norm(), 0.0);
    }

    #[test]
    fn omega_correction_is_quadratic() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let solver = DnoSolver::new(g, 24).unwrap();
        let backend = DnoBackend::FixedPoint {
            tol: 1e-13,
            max_iter: 200,
        };
        let h0 = trig(g, &[(1.0, 0.0, 1.0, 0.0), (0.0, 2.0, 0.6, 0.8)]);
        let p0 = trig(g, &[(1.0, 1.0, 1.0, 0.4), (2.0, 0.0, 0.5, 0.0)]);
        let eps: Vec<f64> = vec![1e-3, 3e-3, 1e-2, 3e-2];
        let mut devs = Vec::new();
        for &e in &eps {
            let state = SurfaceState::new(e * &h0, e * &p0, 0.0).unwrap();
            let gu = good_unknown(&state, &solver, &backend).unwrap();
            devs.push((&gu.omega - &state.psi).l2_norm());
        }
        let fit = slope_fit(&eps, &devs);
        assert!(
            (fit.slope - 2.0).abs() <= 0.1,
            "ω − ψ amplitude slope {} ∉ 2.0±0.1",
            fit.slope
        );
    }

    #[test]
    fn symmetrization_flat_state_values() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let state = SurfaceState::zero(g);
        let syms = symmetrization_symbols(&state, N0_DESK_DEFAULT).unwrap();
        let xi = [3.0, 4.0];
        let at = |s: &XDependentSymbol| {
            let f = s.eval(g, xi);
            f.to_physical_complex()[0]
        };
        assert!((at(&syms.lambda) - Complex64::new(5.0, 0.0)).norm() < 1e-12);
        assert!((at(&syms.l) - Complex64::new(25.0, 0.0)).norm() < 1e-12);
        assert!((at(&syms.p) - Complex64::new(5.0_f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((at(&syms.q) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(at(&syms.gamma).norm() < 1e-14);
        let beta_expect = (2.0 * 5.0_f64.powf(1.5)).powf(16.0 / 3.0);
        assert!((at(&syms.beta).re / beta_expect - 1.0).abs() < 1e-12);
        assert!(symmetrization_symbols(&state, 4).is_err());
        assert!(symmetrization_symbols(&state, 13).is_err());
    }

    #[test]
    fn gamma_linearization_identity() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let h0 = trig(g, &[(1.0, 0.0, 1.0, 0.2), (2.0, 1.0, 0.7, 1.0)]);
        let xi = [2.3_f64, -1.7];
        let r = xi[0].hypot(xi[1]);
        let u = [xi[0] / r, xi[1] / r];
        let h11 = h0.derivative(0).derivative(0);
        let h22 = h0.derivative(1).derivative(1);
        let h12 = h0.derivative(0).derivative(1);
        // Δh − ξ̂ᵀ(∇²h)ξ̂ as a field.
        let quad = &(&(u[1] * u[1] * &h11) + &(u[0] * u[0] * &h22)) - &(2.0 * u[0] * u[1] * &h12);
        let derived = (0.25 * r.sqrt()) * &quad; // |ξ|^{1/2}(Δh − ξ̂ᵀ∇²hξ̂)/4
        let lap = &h11 + &h22;
        let printed = r.sqrt() * &(&(0.5 * &lap) - &(&(u[1] * u[1] * &h11) + &(&(u[0] * u[0] * &h22) + &(2.0 * u[0] * u[1] * &h12))));
        let eps = [1e-3, 2e-3, 4e-3, 8e-3];
        let mut res_derived = Vec::new();
        let mut res_printed = Vec::new();
        let mut linear_scale = Vec::new();
        for &e in &eps {
            let gamma = gamma_exact(&(e * &h0), xi);
            res_derived.push((&gamma - &(e * &derived)).l2_norm());
            res_printed.push((&gamma - &(e * &printed)).l2_norm());
            linear_scale.push(gamma.l2_norm());
        }
        let eps_v: Vec<f64> = eps.to_vec();
        let fit_d = slope_fit(&eps_v, &res_derived);
        let fit_p = slope_fit(&eps_v, &res_printed);
        let fit_lin = slope_fit(&eps_v, &linear_scale);
        eprintln!(
            "Λ₁[γ] residual slopes: quarter-coefficient form {:.3} (R²={:.4}), \
             half/one form {:.3}; |γ| amplitude slope {:.3}",
            fit_d.slope, fit_d.r_squared, fit_p.slope, fit_lin.slope
        );
        // γ is linear in ε at leading order (real-part dominance, slope 1).
        assert!((fit_lin.slope - 1.0).abs() < 0.05);
        assert!(
            fit_d.slope >= 1.9,
            "self-consistent Λ₁[γ] residual slope {} < 1.9",
            fit_d.slope
        );
    }

    #[test]
    fn mean_curvature_residual_slope() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let state0 = trig(g, &[(2.0, 0.0, 1.0, 0.0), (1.0, 2.0, 0.8, 0.7)]);
        let eps = [3e-3, 6e-3, 1.2e-2, 2.4e-2];
        let mut res = Vec::new();
        for &e in &eps {
            let h = e * &state0;
            let st = SurfaceState::new(h.clone(), SpectralField::zeros(g, true), 0.0).unwrap();
            let syms = symmetrization_symbols(&st, N0_DESK_DEFAULT).unwrap();
            let t_l_h = realify(&syms.l.paraproduct(&h).unwrap());
            res.push((&mean_curvature(&h) + &t_l_h).l2_norm());
        }
        let eps_v: Vec<f64> = eps.to_vec();
        let fit = slope_fit(&eps_v, &res);
        eprintln!("mean-curvature residual slope {:.3}", fit.slope);
        assert!(fit.slope >= 1.9, "H(h) + T_l h slope {} < 1.9", fit.slope);
    }

    #[test]
    fn paralinearization_residual_slopes() {
        // Deep-mode data: tanh|ξ| ≈ 1 at the occupied frequencies, so the
        // deep-water symbols match the finite-depth operators below the
        // quadratic residual floor.
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let solver = DnoSolver::new(g, 24).unwrap();
        let backend = DnoBackend::FixedPoint {
            tol: 1e-13,
            max_iter: 200,
        };
        let h0 = trig(g, &[(8.0, 0.0, 1.0, 0.1), (5.0, 6.0, 0.7, 0.9)]);
        let p0 = trig(g, &[(0.0, 8.0, 1.0, 0.5), (6.0, 5.0, 0.6, 0.0)]);
        let eps = [3e-3, 6e-3, 1.2e-2, 2.4e-2];
        let mut res_dn = Vec::new();
        let mut res_ve = Vec::new();
        for &e in &eps {
            let state = SurfaceState::new(e * &h0, e * &p0, 0.0).unwrap();
            let gu = good_unknown(&state, &solver, &backend).unwrap();
            let syms = symmetrization_symbols(&state, N0_DESK_DEFAULT).unwrap();
            let t_lambda_omega = realify(&syms.lambda.paraproduct(&gu.omega).unwrap());
            let t_v_grad_h = &realify(&paraproduct(&gu.v[0], &state.h.derivative(0)).unwrap())
                + &realify(&paraproduct(&gu.v[1], &state.h.derivative(1)).unwrap());
            let residual_dn = &gu.dno - &(&t_lambda_omega - &t_v_grad_h);
            res_dn.push(residual_dn.l2_norm());

            // Lemma for the velocity terms of the ψ equation.
            let hx = state.h.derivative(0);
            let hy = state.h.derivative(1);
            let px = state.psi.derivative(0);
            let py = state.psi.derivative(1);
            let lhs = SpectralField::map_physical_padded(g, &[&hx, &hy, &px, &py, &gu.dno], |v| {
                let grad2 = v[2] * v[2] + v[3] * v[3];
                let num = v[0] * v[2] + v[1] * v[3] + v[4];
                0.5 * grad2 - 0.5 * num * num / (1.0 + v[0] * v[0] + v[1] * v[1])
            });
            let rhs = &(&realify(&paraproduct(&gu.v[0], &gu.omega.derivative(0)).unwrap())
                + &realify(&paraproduct(&gu.v[1], &gu.omega.derivative(1)).unwrap()))
                - &realify(&paraproduct(&gu.b, &gu.dno).unwrap());
            res_ve.push((&lhs - &rhs).l2_norm());
        }
        let eps_v: Vec<f64> = eps.to_vec();
        let fit_dn = slope_fit(&eps_v, &res_dn);
        let fit_ve = slope_fit(&eps_v, &res_ve);
        eprintln!(
            "paralinearization residual slopes: DNO {:.3}, velocity {:.3}",
            fit_dn.slope, fit_ve.slope
        );
        assert!(fit_dn.slope >= 1.9, "DNO residual slope {} < 1.9", fit_dn.slope);
        assert!(fit_ve.slope >= 1.9, "velocity residual slope {} < 1.9", fit_ve.slope);
    }

    #[test]
    fn symmetrized_energy_flat_and_comparability() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let solver = DnoSolver::new(g, 24).unwrap();
        let backend = DnoBackend::FixedPoint {
            tol: 1e-13,
            max_iter: 200,
        };
        // Flat state: U₁ = 0, U₂ = ψ.
        let psi = trig(g, &[(1.0, 0.0, 1.0, 0.0)]);
        let flat = SurfaceState::new(SpectralField::zeros(g, true), psi.clone(), 0.0).unwrap();
        let rep = symmetrized_energy(&flat, &solver, &backend, N0_DESK_DEFAULT).unwrap();
        assert!(rep.u1.l2_norm() < 1e-14);
        assert!(rel_l2(&rep.u2, &psi) < 1e-12);

        // Comparability: E vs ‖Λ̃h‖² + ‖ψ‖² (+ β-weighted) within O(ε).
        let h0 = trig(g, &[(1.0, 0.0, 1.0, 0.0), (2.0, 1.0, 0.5, 0.6)]);
        let p0 = trig(g, &[(1.0, 1.0, 1.0, 0.2), (0.0, 2.0, 0.7, 0.0)]);
        let mut rel = Vec::new();
        let eps = [4e-3, 1.6e-2];
        for &e in &eps {
            let st = SurfaceState::new(e * &h0, e * &p0, 0.0).unwrap();
            let rep = symmetrized_energy(&st, &solver, &backend, N0_DESK_DEFAULT).unwrap();
            let lam_h = st
                .h
                .apply_radial_multiplier(|r| (r / r.tanh()).sqrt(), 1.0)
                .unwrap();
            let syms = symmetrization_symbols(&st, N0_DESK_DEFAULT).unwrap();
            let b_lam_h = realify(&syms.beta.paraproduct(&lam_h).unwrap());
            let b_psi = realify(&syms.beta.paraproduct(&st.psi).unwrap());
            let reference = lam_h.l2_norm().powi(2)
                + st.psi.l2_norm().powi(2)
                + b_lam_h.l2_norm().powi(2)
                + b_psi.l2_norm().powi(2);
            rel.push((rep.energy - reference).abs() / reference);
        }
        eprintln!("energy comparability deviations: {rel:?}");
        assert!(rel[0] <= 10.0 * eps[0] && rel[1] <= 10.0 * eps[1]);
        // The deviation scales between ε and ε² (parity cancellations can
        // suppress the first-order cross terms); it must grow with ε.
        assert!(rel[1] / rel[0] > 1.5 && rel[1] / rel[0] < 20.0);
    }

    #[test]
    fn energy_drift_scaling() {
        use crate::evolution::{Evolver, Integrator, RhsMode};
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let solver = DnoSolver::new(g, 24).unwrap();
        let backend = DnoBackend::FixedPoint {
            tol: 1e-12,
            max_iter: 200,
        };
        let u1_0 = trig(g, &[(1.0, 0.0, 1.0, 0.0), (1.0, 2.0, 0.6, 0.8)]);
        let u2_0 = trig(g, &[(2.0, 0.0, 1.0, 0.3), (0.0, 1.0, 0.8, 0.0)]);
        // The initial state is prepared so the good variables are exactly
        // mono-modal at t = 0 (see `prepare_state`): an unprepared state
        // carries β-amplified quadratic dressing whose instantaneous
        // exchange rate is an ε⁴ term scaled by 2^{2N₀} per octave gap,
        // which dominates the ε³ drift at these amplitudes. The window is
        // kept short so the dressing regrown during the window stays
        // subdominant; N₀ = 6 (the lowest admissible index) minimizes the
        // amplification.
        let n0 = 6;
        let t_final = 0.0002;
        let steps = 2;
        let eps = [6e-3, 2.4e-2];
        let mut rates = Vec::new();
        for &e in &eps {
            let mut evolver = Evolver::new(
                g,
                24,
                RhsMode::Full(backend.clone()),
                Integrator::IntegratingFactor,
            )
            .unwrap();
            let mut state =
                prepare_state(&(e * &u1_0), &(e * &u2_0), &solver, &backend).unwrap();
            let e0 = symmetrized_energy(&state, &solver, &backend, n0)
                .unwrap()
                .energy;
            let dt = t_final / steps as f64;
            for _ in 0..steps {
                state = evolver.step(&state, dt).unwrap();
            }
            let e1 = symmetrized_energy(&state, &solver, &backend, n0)
                .unwrap()
                .energy;
            rates.push((e1 - e0).abs() / t_final);
        }
        let slope = (rates[1] / rates[0]).ln() / (eps[1] / eps[0]).ln();
        eprintln!("energy drift rates {rates:?}, slope {slope:.3}");
        assert!(
            (slope - 3.0).abs() <= 0.4,
            "energy drift slope {slope} ∉ 3.0±0.4"
        );
    }
}
