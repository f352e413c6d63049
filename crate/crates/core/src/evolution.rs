//! Time evolution of the capillary water-wave system, its quadratic
//! truncation in the modified variables, the complex variable `u`, bilinear
//! symbol application, the toy quadratic Schrödinger model, and conserved
//! diagnostics.
//!
//! The full system is
//! `∂_t h = G(h)ψ`,
//! `∂_t ψ = H(h) − ½|∇ψ|² + (G(h)ψ + ∇h·∇ψ)²/(2(1+|∇h|²))`,
//! with `H(h) = ∇·(∇h/√(1+|∇h|²))` the mean-curvature term. The linear
//! part diagonalizes to frequencies `±Λ(|ξ|)`, `Λ(r) = r^{3/2}√tanh r`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{DispersionLaw, Sign};
use crate::dno::{DnoBackend, DnoSolver, StripField};
use crate::error::{CoreError, Result};
use crate::spectral::{theta_cutoff, theta_tilde, Grid2D, SpectralField};

/// `c₊ = −i/2`, `c₋ = i/2`: coefficients of `ψ̃ = c₊u + c₋ū`.
pub fn c_sign(s: Sign) -> Complex64 {
    match s {
        Sign::Plus => Complex64::new(0.0, -0.5),
        Sign::Minus => Complex64::new(0.0, 0.5),
    }
}

/// The multiplier `T = |∇|tanh|∇|`.
fn t_multiplier(f: &SpectralField) -> SpectralField {
    f.apply_radial_multiplier(|r| r * r.tanh(), 0.0)
        .expect("r·tanh r is finite")
}

/// `Λ̃ = |∇|^{1/2}(tanh|∇|)^{−1/2}` and its inverse (both equal 1 at ξ = 0).
fn lambda_tilde_multiplier(f: &SpectralField, inverse: bool) -> SpectralField {
    f.apply_radial_multiplier(
        move |r| {
            let v = DispersionLaw::lambda_tilde(r * r);
            if inverse {
                1.0 / v
            } else {
                v
            }
        },
        1.0,
    )
    .expect("λ̃ is finite and positive")
}

// ---------------------------------------------------------------------------
// States.
// ---------------------------------------------------------------------------

/// The surface unknowns `(h, ψ)` (or `(h, ψ̃)` for the quadratic model).
#[derive(Debug, Clone)]
pub struct SurfaceState {
    pub h: SpectralField,
    pub psi: SpectralField,
    pub time: f64,
}

impl SurfaceState {
    pub fn new(h: SpectralField, psi: SpectralField, time: f64) -> Result<Self> {
        if h.grid() != psi.grid() {
            return Err(CoreError::Validation(
                "h and ψ must share a grid".into(),
            ));
        }
        if !h.is_real() || !psi.is_real() {
            return Err(CoreError::Validation(
                "surface unknowns must be real fields".into(),
            ));
        }
        let sup = h.sup_norm();
        if !(sup < 0.5) {
            return Err(CoreError::Validation(format!(
                "domain degeneracy: ‖h‖_L∞ = {sup:.3e} must stay below 1/2"
            )));
        }
        Ok(SurfaceState { h, psi, time })
    }

    pub fn zero(grid: Grid2D) -> Self {
        SurfaceState {
            h: SpectralField::zeros(grid, true),
            psi: SpectralField::zeros(grid, true),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.h.grid()
    }
}

/// The complex variable `u = Λ̃h + iψ̃`.
#[derive(Debug, Clone)]
pub struct ComplexState {
    pub u: SpectralField,
    pub time: f64,
}

/// `ψ̃ = ψ − T_{Tψ} h` (paraproduct with the low factor `Tψ`).
pub fn psi_tilde_from(h: &SpectralField, psi: &SpectralField) -> SpectralField {
    &*psi - &paraproduct(&t_multiplier(psi), h)
}

/// Inverts `ψ̃ = ψ − T_{Tψ} h` for `ψ` by fixed-point iteration (the map is
/// an `O(‖h‖)` contraction).
pub fn psi_from_tilde(h: &SpectralField, psi_tilde: &SpectralField) -> Result<SpectralField> {
    let scale = psi_tilde.l2_norm().max(f64::MIN_POSITIVE);
    let mut psi = psi_tilde.clone();
    for _ in 0..60 {
        let next = &*psi_tilde + &paraproduct(&t_multiplier(&psi), h);
        let diff = (&next - &psi).l2_norm() / scale;
        psi = next;
        if diff < 1e-15 {
            return Ok(psi);
        }
    }
    Err(CoreError::Divergence(
        "ψ̃ → ψ inversion did not converge (surface too steep?)".into(),
    ))
}

/// `(h, ψ̃) → u = Λ̃h + iψ̃`.
pub fn to_complex(h: &SpectralField, psi_tilde: &SpectralField, time: f64) -> ComplexState {
    let u = &lambda_tilde_multiplier(h, false).into_complex()
        + &(Complex64::i() * &psi_tilde.clone().into_complex());
    ComplexState { u, time }
}

/// `u → (h, ψ̃)`: `h = Λ̃^{−1}((u+ū)/2)`, `ψ̃ = c₊u + c₋ū = Im u`.
pub fn from_complex(state: &ComplexState) -> (SpectralField, SpectralField) {
    let (re, im) = state.u.real_imag_parts();
    (lambda_tilde_multiplier(&re, true), im)
}

// ---------------------------------------------------------------------------
// Bilinear symbol application.
// ---------------------------------------------------------------------------

pub type MultiplierFn = Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>;
pub type SymbolFn = Arc<dyn Fn([f64; 2], [f64; 2]) -> Complex64 + Send + Sync>;

/// One separable term `output(ξ)·left(ξ−η)·right(η)`.
#[derive(Clone)]
pub struct SeparableTerm {
    pub left: MultiplierFn,
    pub right: MultiplierFn,
    pub output: MultiplierFn,
}

/// A bilinear symbol `m(ξ−η, η)`: either a sum of separable multiplier
/// triples (evaluated by dealiased physical products, any grid size) or a
/// dense sampled symbol (exact weighted coefficient convolution, small
/// grids only).
#[derive(Clone)]
pub enum BilinearSymbol {
    Separable(Vec<SeparableTerm>),
    Dense(SymbolFn),
}

/// Largest grid size admitted by the dense path (cost `O(N⁴)`).
pub const DENSE_MAX_N: usize = 64;

/// Input coefficients below this relative threshold are pruned from the
/// dense convolution (deterministic: threshold is scale-invariant).
pub const DENSE_PRUNE_REL: f64 = 1e-16;

impl BilinearSymbol {
    /// The constant symbol `m ≡ 1` (dense; equals the pointwise product for
    /// band-limited inputs).
    pub fn one() -> Self {
        BilinearSymbol::Dense(Arc::new(|_, _| Complex64::new(1.0, 0.0)))
    }

    /// The low-high paraproduct weight `θ(ξ−η, η)` (left factor low).
    pub fn theta_low_high() -> Self {
        BilinearSymbol::Dense(Arc::new(|a, b| Complex64::new(theta_cutoff(a, b), 0.0)))
    }

    /// Pointwise value `m(a, b)` (separable terms are summed).
    pub fn eval(&self, a: [f64; 2], b: [f64; 2]) -> Complex64 {
        match self {
            BilinearSymbol::Dense(m) => m(a, b),
            BilinearSymbol::Separable(terms) => {
                let xi = [a[0] + b[0], a[1] + b[1]];
                terms
                    .iter()
                    .map(|t| (t.left)(a) * (t.right)(b) * (t.output)(xi))
                    .sum()
            }
        }
    }
}

/// Active (pruned) coefficient list of a field: `(offset₁, offset₂, c)`.
fn active_modes(f: &SpectralField) -> Vec<(i64, i64, Complex64)> {
    let n = f.grid().n();
    let max = f.max_coeff();
    let thr = DENSE_PRUNE_REL * max;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = f.coeffs()[i * n + j];
            if c.norm() > thr {
                out.push((f.grid().offset(i), f.grid().offset(j), c));
            }
        }
    }
    out
}

/// `F[Q(f,g)](ξ) = Σ_η m(ξ−η, η) f̂(ξ−η) ĝ(η)` on the lattice.
///
/// The separable path is exact on the retained band via 3/2-dealiased
/// physical products; the dense path is the literal pruned convolution
/// (outputs beyond the representable band, and the Nyquist row, are
/// dropped — the same truncation the dealiased product applies).
pub fn apply_bilinear(
    sym: &BilinearSymbol,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(CoreError::Validation(
            "bilinear inputs must share a grid".into(),
        ));
    }
    let grid = f.grid();
    match sym {
        BilinearSymbol::Separable(terms) => {
            let mut out = SpectralField::zeros(grid, false);
            for t in terms {
                let lf = f.map_coeffs(false, |xi, c| (t.left)(xi) * c);
                let rg = g.map_coeffs(false, |xi, c| (t.right)(xi) * c);
                let prod = lf.mul_dealiased(&rg);
                out = &out + &prod.map_coeffs(false, |xi, c| (t.output)(xi) * c);
            }
            Ok(out)
        }
        BilinearSymbol::Dense(m) => {
            let n = grid.n();
            if n > DENSE_MAX_N {
                return Err(CoreError::Validation(format!(
                    "dense bilinear path refused for n = {n} > {DENSE_MAX_N} \
                     (O(N⁴) cost); use a separable symbol or a coarser grid"
                )));
            }
            let fa = active_modes(f);
            let ga = active_modes(g);
            let half = n as i64 / 2;
            let dxi = grid.dxi();
            let mut out = SpectralField::zeros(grid, false);
            for &(a1, a2, cf) in &fa {
                let av = [a1 as f64 * dxi, a2 as f64 * dxi];
                for &(b1, b2, cg) in &ga {
                    let m1 = a1 + b1;
                    let m2 = a2 + b2;
                    if m1.abs() >= half || m2.abs() >= half {
                        continue;
                    }
                    let bv = [b1 as f64 * dxi, b2 as f64 * dxi];
                    let idx = grid.index_of(m1) * n + grid.index_of(m2);
                    out.coeffs_mut()[idx] += m(av, bv) * cf * cg;
                }
            }
            Ok(out)
        }
    }
}

/// Paraproduct `T_f g` (f at low frequency): real part of the θ-weighted
/// convolution.
pub fn paraproduct(low: &SpectralField, high: &SpectralField) -> SpectralField {
    let q = apply_bilinear(&BilinearSymbol::theta_low_high(), low, high)
        .expect("θ paraproduct within dense limits");
    if low.is_real() && high.is_real() {
        q.real_imag_parts().0
    } else {
        q
    }
}

// ---------------------------------------------------------------------------
// Right-hand sides.
// ---------------------------------------------------------------------------

/// Full nonlinear right-hand side `(∂_t h, ∂_t ψ)` given `G(h)ψ`.
fn rhs_from_dno(state: &SurfaceState, g: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = state.grid();
    let hx = state.h.derivative(0);
    let hy = state.h.derivative(1);
    let px = state.psi.derivative(0);
    let py = state.psi.derivative(1);
    // Mean curvature H(h) = ∇·(∇h/√(1+|∇h|²)).
    let wx = SpectralField::map_physical_padded(grid, &[&hx, &hy], |v| {
        v[0] / (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt()
    });
    let wy = SpectralField::map_physical_padded(grid, &[&hx, &hy], |v| {
        v[1] / (1.0 + v[0] * v[0] + v[1] * v[1]).sqrt()
    });
    let curvature = &wx.derivative(0) + &wy.derivative(1);
    // (G(h)ψ + ∇h·∇ψ)² / (2(1+|∇h|²)) − ½|∇ψ|².
    let quad = SpectralField::map_physical_padded(grid, &[g, &hx, &px, &hy, &py], |v| {
        let num = v[0] + v[1] * v[2] + v[3] * v[4];
        let slope = v[1] * v[1] + v[3] * v[3];
        num * num / (2.0 * (1.0 + slope)) - 0.5 * (v[2] * v[2] + v[4] * v[4])
    });
    (g.clone(), &curvature + &quad)
}

/// Full right-hand side with an explicit solver and backend.
pub fn rhs_full(
    state: &SurfaceState,
    solver: &DnoSolver,
    backend: &DnoBackend,
) -> Result<(SpectralField, SpectralField)> {
    let g = solver.dno_apply(&state.h, &state.psi, backend)?;
    Ok(rhs_from_dno(state, &g))
}

/// Placement of the Laplacian in the `T_{…} h` paraproduct of the
/// quadratic `ψ̃` equation (transcription ambiguity; the literal reading is
/// the default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaPlacement {
    /// Literal: `T_{|∇|tanh|∇| Δh} h`.
    #[default]
    OnHeight,
    /// Alternative reading: `T_{Δ|∇|tanh|∇| ψ̃} h`.
    OnPotential,
}

/// Quadratic-truncation right-hand side in the `(h, ψ̃)` variables:
///
/// `∂_t h   = Tψ̃ + T(T_{Tψ̃}h) − ∇·(h∇ψ̃) − T(h·Tψ̃)`,
/// `∂_t ψ̃  = Δh − ½|∇ψ̃|² + ½(Tψ̃)² − T_{Tψ̃}Tψ̃ − T_{TΔh}h`,
///
/// with `T = |∇|tanh|∇|` and `T_f g` the low-high paraproduct.
pub fn rhs_quadratic(
    state: &SurfaceState,
    variant: DeltaPlacement,
) -> Result<(SpectralField, SpectralField)> {
    let grid = state.grid();
    let h = &state.h;
    let pt = &state.psi; // ψ̃ by convention of this model
    let t_pt = t_multiplier(pt);
    let dh = {
        let lead = t_multiplier(pt);
        let para = t_multiplier(&paraproduct(&t_pt, h));
        let div = &h.mul_dealiased(&pt.derivative(0)).derivative(0)
            + &h.mul_dealiased(&pt.derivative(1)).derivative(1);
        let cross = t_multiplier(&h.mul_dealiased(&t_pt));
        &(&lead + &para) - &(&div + &cross)
    };
    let dpt = {
        let lap_h = h.laplacian();
        let ptx = pt.derivative(0);
        let pty = pt.derivative(1);
        let quad = SpectralField::map_physical_padded(grid, &[&ptx, &pty, &t_pt], |v| {
            -0.5 * (v[0] * v[0] + v[1] * v[1]) + 0.5 * v[2] * v[2]
        });
        let para1 = paraproduct(&t_pt, &t_pt);
        let low = match variant {
            DeltaPlacement::OnHeight => t_multiplier(&lap_h),
            DeltaPlacement::OnPotential => t_multiplier(pt).laplacian(),
        };
        let para2 = paraproduct(&low, h);
        &(&lap_h + &quad) - &(&para1 + &para2)
    };
    Ok((dh, dpt))
}

// ---------------------------------------------------------------------------
// Linear propagator and time stepping.
// ---------------------------------------------------------------------------

/// Exact linear flow of `∂_t h = Tψ`, `∂_t ψ = Δh` by time `s` (per-mode
/// rotation at frequency `Λ(|ξ|)`; identity at ξ = 0). Preserves reality.
pub fn linear_propagate_pair(
    h: &SpectralField,
    psi: &SpectralField,
    s: f64,
) -> (SpectralField, SpectralField) {
    let grid = h.grid();
    let n = grid.n();
    let mut h_out = h.clone();
    let mut p_out = psi.clone();
    for i in 0..n {
        for j in 0..n {
            let xi = grid.wavevector(i, j);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            if r == 0.0 {
                continue;
            }
            let lam = DispersionLaw::capital_lambda(r);
            let tilde = DispersionLaw::lambda_tilde(r * r); // Λ/T = r²/Λ
            let (sn, cs) = (lam * s).sin_cos();
            let idx = i * n + j;
            let hc = h.coeffs()[idx];
            let pc = psi.coeffs()[idx];
            h_out.coeffs_mut()[idx] = cs * hc + (sn / tilde) * pc;
            p_out.coeffs_mut()[idx] = -(sn * tilde) * hc + cs * pc;
        }
    }
    (h_out, p_out)
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Classical RK4 on the stiff system (CFL-guarded).
    Rk4,
    /// Lawson integrating-factor RK4: the linear flow is exact, only the
    /// nonlinearity is stepped (no stiffness constraint).
    IntegratingFactor,
}

/// Which right-hand side drives the evolution.
#[derive(Clone)]
pub enum RhsMode {
    Full(DnoBackend),
    Quadratic(DeltaPlacement),
}

/// Minimum subgrid size the adaptive Dirichlet–Neumann path may select.
const ADAPTIVE_MIN_N: usize = 32;
/// Relative spectral tail mass the adaptive path is allowed to discard.
const ADAPTIVE_TAIL_TOL: f64 = 1e-13;

/// Driver owning the solver(s), warm-start cache, and stepping scheme.
pub struct Evolver {
    grid: Grid2D,
    n_z_nodes: usize,
    pub mode: RhsMode,
    pub scheme: Integrator,
    /// Solve the strip problem on the smallest subgrid that carries the
    /// state (full-band solves are unchanged up to `ADAPTIVE_TAIL_TOL`).
    pub adaptive: bool,
    solvers: HashMap<usize, DnoSolver>,
    cache: Option<(usize, StripField)>,
}

impl Evolver {
    pub fn new(grid: Grid2D, n_z_nodes: usize, mode: RhsMode, scheme: Integrator) -> Result<Self> {
        Ok(Evolver {
            grid,
            n_z_nodes,
            mode,
            scheme,
            adaptive: true,
            solvers: HashMap::new(),
            cache: None,
        })
    }

    fn solver_for(&mut self, n: usize) -> Result<&DnoSolver> {
        if !self.solvers.contains_key(&n) {
            let sub = Grid2D::new(n, self.grid.box_length())?;
            self.solvers.insert(n, DnoSolver::new(sub, self.n_z_nodes)?);
        }
        Ok(&self.solvers[&n])
    }

    /// Smallest admissible subgrid: both fields must carry less than
    /// `ADAPTIVE_TAIL_TOL` relative mass at offsets `|m|_∞ ≥ n_sub/8`. The
    /// factor-8 margin keeps not just quadratic but the first several
    /// iterated interactions of retained modes representable, so the
    /// subgrid solve agrees with the full one to well below the fixed-point
    /// tolerance for small-amplitude states.
    fn select_subgrid(&self, h: &SpectralField, psi: &SpectralField) -> usize {
        let mut n_sub = ADAPTIVE_MIN_N;
        while n_sub < self.grid.n() {
            let cut = n_sub as i64 / 8;
            let ok = |f: &SpectralField| {
                f.tail_mass(cut) <= ADAPTIVE_TAIL_TOL * f.l2_norm().max(f64::MIN_POSITIVE)
            };
            if ok(h) && ok(psi) {
                return n_sub;
            }
            n_sub *= 2;
        }
        self.grid.n()
    }

    /// `G(h)ψ` through the configured backend, with subgrid adaptivity and
    /// warm starting for the fixed-point backend.
    pub fn dno(&mut self, h: &SpectralField, psi: &SpectralField) -> Result<SpectralField> {
        let backend = match &self.mode {
            RhsMode::Full(b) => *b,
            RhsMode::Quadratic(_) => {
                return Err(CoreError::Validation(
                    "quadratic mode has no Dirichlet–Neumann backend".into(),
                ))
            }
        };
        if let DnoBackend::FixedPoint { tol, max_iter } = backend {
            let n_sub = if self.adaptive {
                self.select_subgrid(h, psi)
            } else {
                self.grid.n()
            };
            let sub = Grid2D::new(n_sub, self.grid.box_length())?;
            let (hs, ps) = (h.restrict_to(sub)?, psi.restrict_to(sub)?);
            let warm = match &self.cache {
                Some((n, strip)) if *n == n_sub => Some(strip.clone()),
                _ => None,
            };
            let solver = self.solver_for(n_sub)?;
            let (strip, _) = solver.solve_core(&hs, &ps, tol, max_iter, warm.as_ref())?;
            let g = solver.dno_from_strip(&hs, &ps, &strip)?;
            self.cache = Some((n_sub, strip));
            g.prolong_to(self.grid)
        } else {
            let solver = self.solver_for(self.grid.n())?;
            solver.dno_apply(h, psi, &backend)
        }
    }

    /// Right-hand side under the configured mode.
    pub fn rhs(&mut self, state: &SurfaceState) -> Result<(SpectralField, SpectralField)> {
        match self.mode.clone() {
            RhsMode::Full(_) => {
                let g = self.dno(&state.h, &state.psi)?;
                Ok(rhs_from_dno(state, &g))
            }
            RhsMode::Quadratic(variant) => rhs_quadratic(state, variant),
        }
    }

    /// Nonlinear part (full RHS minus the linear flow `(Tψ, Δh)`).
    fn nonlinear(&mut self, state: &SurfaceState) -> Result<(SpectralField, SpectralField)> {
        let (dh, dp) = self.rhs(state)?;
        Ok((
            &dh - &t_multiplier(&state.psi),
            &dp - &state.h.laplacian(),
        ))
    }

    /// One deterministic time step.
    pub fn step(&mut self, state: &SurfaceState, dt: f64) -> Result<SurfaceState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CoreError::Validation(format!("invalid dt = {dt}")));
        }
        let (h, psi) = match self.scheme {
            Integrator::Rk4 => self.step_rk4(state, dt)?,
            Integrator::IntegratingFactor => self.step_lawson(state, dt)?,
        };
        if h.has_non_finite() || psi.has_non_finite() {
            return Err(CoreError::Divergence(format!(
                "non-finite state after step at t = {}",
                state.time + dt
            )));
        }
        SurfaceState::new(h, psi, state.time + dt)
    }

    fn step_rk4(&mut self, state: &SurfaceState, dt: f64) -> Result<(SpectralField, SpectralField)> {
        // CFL-style guard: the fastest mode must resolve its rotation.
        let r_max = self.grid.nyquist() * 2f64.sqrt();
        let lam_max = DispersionLaw::capital_lambda(r_max);
        if dt * lam_max > std::f64::consts::FRAC_PI_4 {
            return Err(CoreError::Validation(format!(
                "RK4 refused: dt·Λ_max = {:.3e} exceeds π/4; reduce dt below {:.3e} \
                 or use the integrating-factor scheme",
                dt * lam_max,
                std::f64::consts::FRAC_PI_4 / lam_max
            )));
        }
        let at = |h: &SpectralField, p: &SpectralField, t: f64| SurfaceState {
            h: h.clone(),
            psi: p.clone(),
            time: t,
        };
        let t0 = state.time;
        let (k1h, k1p) = self.rhs(state)?;
        let s2 = at(
            &(&state.h + &(0.5 * dt * &k1h)),
            &(&state.psi + &(0.5 * dt * &k1p)),
            t0 + 0.5 * dt,
        );
        let (k2h, k2p) = self.rhs(&s2)?;
        let s3 = at(
            &(&state.h + &(0.5 * dt * &k2h)),
            &(&state.psi + &(0.5 * dt * &k2p)),
            t0 + 0.5 * dt,
        );
        let (k3h, k3p) = self.rhs(&s3)?;
        let s4 = at(
            &(&state.h + &(dt * &k3h)),
            &(&state.psi + &(dt * &k3p)),
            t0 + dt,
        );
        let (k4h, k4p) = self.rhs(&s4)?;
        let comb = |k1: &SpectralField, k2: &SpectralField, k3: &SpectralField, k4: &SpectralField| {
            (dt / 6.0) * &(&(&(k1 + &(2.0 * k2)) + &(2.0 * k3)) + k4)
        };
        Ok((
            &state.h + &comb(&k1h, &k2h, &k3h, &k4h),
            &state.psi + &comb(&k1p, &k2p, &k3p, &k4p),
        ))
    }

    /// Lawson (integrating-factor) RK4: exact linear flow between stages.
    fn step_lawson(&mut self, state: &SurfaceState, dt: f64) -> Result<(SpectralField, SpectralField)> {
        let t0 = state.time;
        let half = 0.5 * dt;
        let prop = linear_propagate_pair;
        let at = |hp: (SpectralField, SpectralField), t: f64| -> Result<SurfaceState> {
            SurfaceState::new(hp.0, hp.1, t)
        };
        let (n1h, n1p) = self.nonlinear(state)?;
        let y2 = prop(
            &(&state.h + &(half * &n1h)),
            &(&state.psi + &(half * &n1p)),
            half,
        );
        let (n2h, n2p) = self.nonlinear(&at(y2, t0 + half)?)?;
        let y_half = prop(&state.h, &state.psi, half);
        let y3 = (
            &y_half.0 + &(half * &n2h),
            &y_half.1 + &(half * &n2p),
        );
        let (n3h, n3p) = self.nonlinear(&at(y3, t0 + half)?)?;
        let y_full = prop(&state.h, &state.psi, dt);
        let n3_prop = prop(&n3h, &n3p, half);
        let y4 = (
            &y_full.0 + &(dt * &n3_prop.0),
            &y_full.1 + &(dt * &n3_prop.1),
        );
        let (n4h, n4p) = self.nonlinear(&at(y4, t0 + dt)?)?;
        let n1_prop = prop(&n1h, &n1p, dt);
        let n23_prop = prop(&(&n2h + &n3h), &(&n2p + &n3p), half);
        Ok((
            &y_full.0 + &((dt / 6.0) * &(&(&n1_prop.0 + &(2.0 * &n23_prop.0)) + &n4h)),
            &y_full.1 + &((dt / 6.0) * &(&(&n1_prop.1 + &(2.0 * &n23_prop.1)) + &n4p)),
        ))
    }

    /// Conserved quantities through the configured backend.
    pub fn diagnostics(&mut self, state: &SurfaceState) -> Result<Diagnostics> {
        let g = self.dno(&state.h, &state.psi)?;
        Ok(diagnostics_from_dno(state, &g))
    }
}

// ---------------------------------------------------------------------------
// Conserved diagnostics.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Diagnostics {
    /// `H = ∫ ½ψG(h)ψ + |∇h|²/(1+√(1+|∇h|²)) dx`.
    pub energy: f64,
    /// `∫ h dx`.
    pub momentum: f64,
    /// Small-amplitude proxy `½(‖∇h‖² + ‖|∇|^{1/2}√tanh|∇| ψ‖²)`.
    pub quadratic_energy: f64,
}

fn diagnostics_from_dno(state: &SurfaceState, g: &SpectralField) -> Diagnostics {
    let grid = state.grid();
    let hx = state.h.derivative(0);
    let hy = state.h.derivative(1);
    let surface = SpectralField::map_physical_padded(grid, &[&hx, &hy], |v| {
        let g2 = v[0] * v[0] + v[1] * v[1];
        g2 / (1.0 + (1.0 + g2).sqrt())
    });
    let energy = 0.5 * state.psi.inner_l2(g) + surface.integral().re;
    let momentum = state.h.integral().re;
    let half_psi = state
        .psi
        .apply_radial_multiplier(|r| (r * r.tanh()).sqrt(), 0.0)
        .expect("√(r tanh r) finite");
    let quadratic_energy =
        0.5 * (hx.l2_norm().powi(2) + hy.l2_norm().powi(2) + half_psi.l2_norm().powi(2));
    Diagnostics {
        energy,
        momentum,
        quadratic_energy,
    }
}

/// Conserved quantities with an explicit solver and backend.
pub fn conserved_diagnostics(
    state: &SurfaceState,
    solver: &DnoSolver,
    backend: &DnoBackend,
) -> Result<Diagnostics> {
    let g = solver.dno_apply(&state.h, &state.psi, backend)?;
    Ok(diagnostics_from_dno(state, &g))
}

// ---------------------------------------------------------------------------
// The quadratic symbol q_{μν}.
// ---------------------------------------------------------------------------

/// The quadratic interaction symbol `q_{μν}(ξ−η, η)` of the complex
/// equation, in the rearranged convention where the second argument is the
/// relatively smaller frequency. Two-branch formula: a symmetric-region
/// branch weighted by `θ̃(η, ξ−η)` and a low-high branch weighted by
/// `θ(η, ξ−η)`.
pub fn quadratic_symbol_q(mu: Sign, nu: Sign, a: [f64; 2], b: [f64; 2]) -> Complex64 {
    let xi = [a[0] + b[0], a[1] + b[1]];
    let na = (a[0] * a[0] + a[1] * a[1]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
    let nxi = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    let c_mu = c_sign(mu);
    let c_nu = c_sign(nu);
    let lt_xi = DispersionLaw::lambda_tilde(nxi * nxi);
    let lt_a = DispersionLaw::lambda_tilde(na * na);
    let lt_b = DispersionLaw::lambda_tilde(nb * nb);
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let sym_branch = c_nu * (lt_xi / (2.0 * lt_a))
        * (dot(xi, b) - nxi * nb * nxi.tanh() * nb.tanh())
        + Complex64::i() * c_mu * c_nu * 0.5 * (dot(a, b) + na * nb * na.tanh() * nb.tanh());
    let low_branch = c_mu * (lt_xi / (2.0 * lt_b))
        * (dot(a, xi) - na * nxi * nxi.tanh() * na.tanh())
        + c_nu * (lt_xi / (2.0 * lt_a)) * dot(xi, b)
        + Complex64::i() * c_mu * c_nu * dot(a, b)
        + Complex64::new(0.0, 0.25) * nb * nb * nb.tanh() * nb.tanh();
    sym_branch * theta_tilde(b, a) + low_branch * theta_cutoff(b, a)
}

// ---------------------------------------------------------------------------
// Toy quadratic Schrödinger model.
// ---------------------------------------------------------------------------

/// `(∂_t − iΔ)v = Q₁(v, v̄) + Q₂(v, v) + Q₃(v̄, v̄)`.
pub fn toy_schrodinger_rhs(
    v: &SpectralField,
    q1: &BilinearSymbol,
    q2: &BilinearSymbol,
    q3: &BilinearSymbol,
) -> Result<SpectralField> {
    let vb = v.conj();
    let mut out = apply_bilinear(q1, v, &vb)?;
    out = &out + &apply_bilinear(q2, v, v)?;
    out = &out + &apply_bilinear(q3, &vb, &vb)?;
    Ok(out)
}

/// Default admissible toy symbol: the separable truncation
/// `χ(|ξ−η|)·χ(|η|)` with `χ(r) = r²/(1+r²)`, which obeys the required
/// band bound `min{2^{2max(k₁,k₂)}, 1}` up to a constant.
pub fn toy_default_symbol() -> BilinearSymbol {
    let chi: MultiplierFn = Arc::new(|xi: [f64; 2]| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        Complex64::new(r2 / (1.0 + r2), 0.0)
    });
    BilinearSymbol::Separable(vec![SeparableTerm {
        left: chi.clone(),
        right: chi,
        output: Arc::new(|_| Complex64::new(1.0, 0.0)),
    }])
}

/// One Lawson-RK4 step of the toy model (linear flow `e^{itΔ}` exact).
pub fn toy_step(
    v: &SpectralField,
    dt: f64,
    q1: &BilinearSymbol,
    q2: &BilinearSymbol,
    q3: &BilinearSymbol,
) -> Result<SpectralField> {
    let prop = |f: &SpectralField, s: f64| {
        f.map_coeffs(false, |xi, c| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            c * Complex64::from_polar(1.0, -s * r2)
        })
    };
    let nl = |f: &SpectralField| toy_schrodinger_rhs(f, q1, q2, q3);
    let half = 0.5 * dt;
    let n1 = nl(v)?;
    let y2 = prop(&(v + &(half * &n1)), half);
    let n2 = nl(&y2)?;
    let y3 = &prop(v, half) + &(half * &n2);
    let n3 = nl(&y3)?;
    let y4 = &prop(v, dt) + &(dt * &prop(&n3, half));
    let n4 = nl(&y4)?;
    Ok(&prop(v, dt)
        + &((dt / 6.0) * &(&(&prop(&n1, dt) + &(2.0 * &prop(&(&n2 + &n3), half))) + &n4)))
}
