//! Dirichlet–Neumann operator on the flattened strip `R² × [−1, 0]`.
//!
//! The fluid domain `{−1 < y < h(x)}` is mapped onto the strip by
//! `z = (y − h)/(1 + h)`; the harmonic velocity potential becomes the
//! solution of a variable-coefficient elliptic problem
//! `Δ_x φ + ã ∂_z²φ + b̃·∇∂_zφ + c̃ ∂_zφ = 0` with `φ(·,0) = ψ` and
//! `∂_zφ(·,−1) = 0`. The solve inverts this by Picard iteration on an
//! explicit integral fixed-point equation whose kernels are bounded
//! exponential ratios; the operator itself is
//! `G(h)ψ = (1+|∇h|²)/(1+h)·∂_zφ|_{z=0} − ∇ψ·∇h`.
//!
//! Taylor backends evaluate the expansion of `G(h)ψ` in powers of `h`:
//! the linear term is `|∇|tanh|∇| ψ`, the quadratic term is
//! `−∇·(h∇ψ) − |∇|tanh|∇|(h |∇|tanh|∇| ψ)`, and the cubic term is
//! extracted numerically from the full solve by odd-order polarization.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::OnceCell;
use serde::Serialize;

use crate::dispersion::DispersionLaw;
use crate::error::{CoreError, Result};
use crate::spectral::{Grid2D, SpectralField};

/// How `G(h)ψ` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DnoBackend {
    /// Linear term only: `|∇|tanh|∇| ψ`.
    Taylor1,
    /// Linear + quadratic terms.
    Taylor2,
    /// Linear + quadratic + cubic (cubic by polarization of the full solve).
    Taylor3,
    /// Full fixed-point solve of the strip problem.
    FixedPoint { tol: f64, max_iter: usize },
}

impl DnoBackend {
    pub fn validate(&self) -> Result<()> {
        if let DnoBackend::FixedPoint { tol, max_iter } = self {
            if !(*tol > 0.0) {
                return Err(CoreError::Validation(format!(
                    "fixed-point tolerance must be positive, got {tol}"
                )));
            }
            if *max_iter < 1 {
                return Err(CoreError::Validation(
                    "fixed-point max_iter must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One of the three explicit strip kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    K1,
    K2,
    K3,
}

/// `∇_{x,z} φ` sampled at a list of vertical nodes: per node the two
/// horizontal derivative fields and the vertical derivative field.
#[derive(Debug, Clone)]
pub struct StripField {
    pub z_nodes: Vec<f64>,
    pub grad_x: Vec<SpectralField>,
    pub grad_y: Vec<SpectralField>,
    pub dz: Vec<SpectralField>,
}

impl StripField {
    pub fn node_count(&self) -> usize {
        self.z_nodes.len()
    }

    /// Index of the node closest to `z` (exact for stored rows).
    pub fn node_at(&self, z: f64) -> usize {
        let mut best = 0;
        for (i, zi) in self.z_nodes.iter().enumerate() {
            if (zi - z).abs() < (self.z_nodes[best] - z).abs() {
                best = i;
            }
        }
        best
    }
}

/// Variable coefficients of the flattened Laplace operator, per node.
#[derive(Debug, Clone)]
pub struct StripCoefficients {
    pub z_nodes: Vec<f64>,
    /// `ã = (1 + (z+1)²|∇h|²)/(1+h)²`.
    pub a: Vec<SpectralField>,
    /// `b̃ = −2(z+1)∇h/(1+h)` (two components).
    pub b_x: Vec<SpectralField>,
    pub b_y: Vec<SpectralField>,
    /// `c̃ = −(z+1)Δh/(1+h) + 2(z+1)|∇h|²/(1+h)²`.
    pub c: Vec<SpectralField>,
}

/// Sources of the fixed-point equation, per node.
#[derive(Debug, Clone)]
pub struct GSources {
    pub g1: Vec<SpectralField>,
    pub g2: Vec<SpectralField>,
    pub g3_x: Vec<SpectralField>,
    pub g3_y: Vec<SpectralField>,
}

/// Fixed-point solve diagnostics (serialized to JSON by the CLI).
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    /// Relative increment per iteration.
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub contraction_factors: Vec<f64>,
    /// Max over interior nodes of the L² norm of the flattened-Laplacian
    /// residual.
    pub laplace_residual: f64,
    /// `‖∂_zφ(·,−1)‖_{L²}` (bottom Neumann condition).
    pub bottom_residual: f64,
    /// Max over components of `‖∇φ(·,0) − ∇ψ‖_{L²}` (top Dirichlet
    /// condition, via the tangential gradient).
    pub dirichlet_residual: f64,
}

// ---------------------------------------------------------------------------
// Quadrature and interpolation helpers.
// ---------------------------------------------------------------------------

/// Legendre polynomial `P_n` and its derivative at `t` (|t| < 1).
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, ascending.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = -p / dp;
            t += dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        // Initial guesses descend from +1; store ascending.
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

/// Barycentric interpolation weights for arbitrary distinct nodes.
fn bary_weights(nodes: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let mut w = vec![1.0; q];
    for i in 0..q {
        for j in 0..q {
            if i != j {
                w[i] /= nodes[i] - nodes[j];
            }
        }
    }
    w
}

/// Lagrange basis values `ℓ_j(x)` via the barycentric formula.
fn lagrange_basis(nodes: &[f64], w: &[f64], x: f64) -> Vec<f64> {
    let q = nodes.len();
    for (j, zj) in nodes.iter().enumerate() {
        if (x - zj).abs() < 1e-14 {
            let mut e = vec![0.0; q];
            e[j] = 1.0;
            return e;
        }
    }
    let terms: Vec<f64> = (0..q).map(|j| w[j] / (x - nodes[j])).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / s).collect()
}

/// Differentiation matrix (row-major `q×q`) for the barycentric nodes.
fn diff_matrix(nodes: &[f64], w: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let mut d = vec![0.0; q * q];
    for i in 0..q {
        let mut diag = 0.0;
        for j in 0..q {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[i * q + j] = v;
                diag -= v;
            }
        }
        d[i * q + i] = diag;
    }
    d
}

// ---------------------------------------------------------------------------
// Kernel evaluation (all exponents ≤ 0: no overflow at any |ξ|).
// ---------------------------------------------------------------------------

/// `cosh((z+1)r)/cosh(r)` in decaying form (`z ∈ [−1,0]`).
fn cosh_ratio(z: f64, r: f64) -> f64 {
    ((z * r).exp() + (-(z + 2.0) * r).exp()) / (1.0 + (-2.0 * r).exp())
}

/// `sinh((z+1)r)/cosh(r)` in decaying form.
fn sinh_ratio(z: f64, r: f64) -> f64 {
    ((z * r).exp() - (-(z + 2.0) * r).exp()) / (1.0 + (-2.0 * r).exp())
}

/// Radial parts of one kernel at `(z, s, |ξ|)`: the scalar multiplying the
/// directional factor `iξ/(2|ξ|)` in the horizontal component, and the
/// vertical component (its `1/2` included).
fn kernel_parts(which: KernelKind, z: f64, s: f64, r: f64) -> (f64, f64) {
    let d = 1.0 + (-2.0 * r).exp();
    match which {
        KernelKind::K1 => {
            let a = (((s - z - 2.0) * r).exp() - ((z + s - 2.0) * r).exp()) / d;
            let b = (((z + s - 2.0) * r).exp() + ((s - z - 2.0) * r).exp()) / d;
            let e = ((z + s) * r).exp();
            (a + e, 0.5 * (e - b))
        }
        KernelKind::K2 => {
            let a2 = ((-(z + s + 2.0) * r).exp() - ((z - s - 2.0) * r).exp()) / d;
            let b2 = (((z - s - 2.0) * r).exp() + (-(z + s + 2.0) * r).exp()) / d;
            (a2, -0.5 * b2)
        }
        KernelKind::K3 => {
            let f = (-(z - s).abs() * r).exp();
            let sg = if s > z {
                1.0
            } else if s < z {
                -1.0
            } else {
                0.0
            };
            (f, 0.5 * f * sg)
        }
    }
}

/// Radial parts of the two kernel combinations entering the fixed point:
/// `(K1 − K2 − K3)` acting on `g2 + ∇·g3`, and
/// `(K3 |∇| sign(z−s) − |∇|(K1 + K2))` acting on `g1`.
/// Returns `(ha, va, hb, vb)` = (horizontal, vertical) radial factors.
fn kernel_combo(z: f64, s: f64, r: f64) -> (f64, f64, f64, f64) {
    let d = 1.0 + (-2.0 * r).exp();
    let a = (((s - z - 2.0) * r).exp() - ((z + s - 2.0) * r).exp()) / d;
    let b = (((z + s - 2.0) * r).exp() + ((s - z - 2.0) * r).exp()) / d;
    let a2 = ((-(z + s + 2.0) * r).exp() - ((z - s - 2.0) * r).exp()) / d;
    let b2 = (((z - s - 2.0) * r).exp() + (-(z + s + 2.0) * r).exp()) / d;
    let e = ((z + s) * r).exp();
    let f = (-(z - s).abs() * r).exp();
    let sg = if s > z {
        1.0
    } else if s < z {
        -1.0
    } else {
        0.0
    };
    let ha = a + e - a2 - f;
    let va = 0.5 * (e - b) + 0.5 * b2 - 0.5 * f * sg;
    let hb = r * (-f * sg - a - e - a2);
    let vb = -0.5 * r * (f + e - b - b2);
    (ha, va, hb, vb)
}

// ---------------------------------------------------------------------------
// Precomputed quadrature tables.
// ---------------------------------------------------------------------------

/// Sub-panel Gauss–Legendre node count for the `s`-integrals (the kernels
/// kink at `s = z`, so each output row integrates two smooth panels).
const PANEL_NODES: usize = 24;

/// Precomputed contraction weights: for each output row `z`, storage node
/// `j` and lattice radius, the quadrature-collapsed kernel weights. They
/// depend only on the grid and node count, never on `(h, ψ)`.
struct KernelTables {
    q: usize,
    rows: Vec<f64>,
    radii: Vec<f64>,
    /// Lattice point → index into `radii`.
    radius_index: Vec<usize>,
    w_ah: Vec<f64>,
    w_av: Vec<f64>,
    w_bh: Vec<f64>,
    w_bv: Vec<f64>,
}

impl KernelTables {
    fn weight_base(&self, row: usize, j: usize) -> usize {
        (row * self.q + j) * self.radii.len()
    }
}

fn unique_radii(grid: Grid2D) -> (Vec<f64>, Vec<usize>) {
    let n = grid.n();
    let mut radii: Vec<f64> = Vec::new();
    let mut all = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let xi = grid.wavevector(i, j);
            all.push((xi[0] * xi[0] + xi[1] * xi[1]).sqrt());
        }
    }
    let mut sorted = all.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    radii.extend_from_slice(&sorted);
    let index = all
        .iter()
        .map(|r| radii.partition_point(|x| x < r))
        .collect();
    (radii, index)
}

fn build_tables(grid: Grid2D, z_nodes: &[f64], bary: &[f64]) -> KernelTables {
    let q = z_nodes.len();
    let mut rows = z_nodes.to_vec();
    rows.push(0.0);
    rows.push(-1.0);
    let (radii, radius_index) = unique_radii(grid);
    let nr = radii.len();
    let len = rows.len() * q * nr;
    let mut w_ah = vec![0.0; len];
    let mut w_av = vec![0.0; len];
    let mut w_bh = vec![0.0; len];
    let mut w_bv = vec![0.0; len];
    for (row_i, &z) in rows.iter().enumerate() {
        for (a, b) in [(-1.0, z), (z, 0.0)] {
            if b - a < 1e-14 {
                continue;
            }
            let (sn, sw) = gauss_legendre_on(PANEL_NODES, a, b);
            for (&s, &w) in sn.iter().zip(&sw) {
                let basis = lagrange_basis(z_nodes, bary, s);
                for (ri, &r) in radii.iter().enumerate() {
                    let (ha, va, hb, vb) = kernel_combo(z, s, r);
                    for (j, &lj) in basis.iter().enumerate() {
                        let idx = (row_i * q + j) * nr + ri;
                        let wl = w * lj;
                        w_ah[idx] += wl * ha;
                        w_av[idx] += wl * va;
                        w_bh[idx] += wl * hb;
                        w_bv[idx] += wl * vb;
                    }
                }
            }
        }
    }
    KernelTables {
        q,
        rows,
        radii,
        radius_index,
        w_ah,
        w_av,
        w_bh,
        w_bv,
    }
}

type TableKey = (usize, u64, usize);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<KernelTables>>> {
    static CACHE: OnceCell<Mutex<HashMap<TableKey, Arc<KernelTables>>>> = OnceCell::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

// ---------------------------------------------------------------------------
// Strip coefficients and sources (dealiased physical-space algebra).
// ---------------------------------------------------------------------------

fn check_amplitude(h: &SpectralField) -> Result<()> {
    let sup = h.sup_norm();
    if !(sup < 0.5) {
        return Err(CoreError::Validation(format!(
            "domain degeneracy: ‖h‖_L∞ = {sup:.3e} must stay below 1/2"
        )));
    }
    Ok(())
}

/// `h`-dependent coefficient samples on the padded physical grid, shared by
/// every node and iteration of one solve.
struct CoeffPhys {
    /// `(2h + h²)/(1+h)²`.
    a0: Vec<f64>,
    /// `|∇h|²/(1+h)²`.
    a2: Vec<f64>,
    /// `∇h/(1+h)`.
    bx: Vec<f64>,
    by: Vec<f64>,
}

fn coeff_phys(h: &SpectralField) -> CoeffPhys {
    let hx = h.derivative(0);
    let hy = h.derivative(1);
    let hp = h.padded_physical();
    let hxp = hx.padded_physical();
    let hyp = hy.padded_physical();
    let m = hp.len();
    let mut a0 = vec![0.0; m];
    let mut a2 = vec![0.0; m];
    let mut bx = vec![0.0; m];
    let mut by = vec![0.0; m];
    for p in 0..m {
        let hv = hp[p].re;
        let gx = hxp[p].re;
        let gy = hyp[p].re;
        let w = 1.0 + hv;
        a0[p] = (2.0 * hv + hv * hv) / (w * w);
        a2[p] = (gx * gx + gy * gy) / (w * w);
        bx[p] = gx / w;
        by[p] = gy / w;
    }
    CoeffPhys { a0, a2, bx, by }
}

/// Raw (padded-physical) sources at one node; converted back to spectral
/// fields by the caller.
struct NodeSources {
    g1: SpectralField,
    g2: SpectralField,
    g3_x: SpectralField,
    g3_y: SpectralField,
}

fn sources_at(
    grid: Grid2D,
    cp: &CoeffPhys,
    z: f64,
    gx: &SpectralField,
    gy: &SpectralField,
    dz: &SpectralField,
) -> NodeSources {
    let gxp = gx.padded_physical();
    let gyp = gy.padded_physical();
    let dzp = dz.padded_physical();
    let m = gxp.len();
    let zp = z + 1.0;
    let mut g1 = vec![Complex64::default(); m];
    let mut g2 = vec![Complex64::default(); m];
    let mut g3x = vec![Complex64::default(); m];
    let mut g3y = vec![Complex64::default(); m];
    for p in 0..m {
        let vx = gxp[p].re;
        let vy = gyp[p].re;
        let vz = dzp[p].re;
        let tangential = cp.bx[p] * vx + cp.by[p] * vy;
        g1[p] = Complex64::new((cp.a0[p] - zp * zp * cp.a2[p]) * vz + zp * tangential, 0.0);
        g2[p] = Complex64::new(zp * cp.a2[p] * vz - tangential, 0.0);
        g3x[p] = Complex64::new(zp * cp.bx[p] * vz, 0.0);
        g3y[p] = Complex64::new(zp * cp.by[p] * vz, 0.0);
    }
    NodeSources {
        g1: SpectralField::from_padded_physical(grid, g1, true),
        g2: SpectralField::from_padded_physical(grid, g2, true),
        g3_x: SpectralField::from_padded_physical(grid, g3x, true),
        g3_y: SpectralField::from_padded_physical(grid, g3y, true),
    }
}

/// `g1` only (cheaper path for the boundary rows of the iterate).
fn g1_at(
    grid: Grid2D,
    cp: &CoeffPhys,
    z: f64,
    gx: &SpectralField,
    gy: &SpectralField,
    dz: &SpectralField,
) -> SpectralField {
    let gxp = gx.padded_physical();
    let gyp = gy.padded_physical();
    let dzp = dz.padded_physical();
    let m = gxp.len();
    let zp = z + 1.0;
    let mut g1 = vec![Complex64::default(); m];
    for p in 0..m {
        let tangential = cp.bx[p] * gxp[p].re + cp.by[p] * gyp[p].re;
        g1[p] = Complex64::new(
            (cp.a0[p] - zp * zp * cp.a2[p]) * dzp[p].re + zp * tangential,
            0.0,
        );
    }
    SpectralField::from_padded_physical(grid, g1, true)
}

// ---------------------------------------------------------------------------
// The solver.
// ---------------------------------------------------------------------------

/// Strip solver bound to one grid and one vertical quadrature.
///
/// Vertical storage nodes are Gauss–Legendre points on `[−1, 0]`; the
/// returned [`StripField`]s carry these plus the two boundary rows `z = 0`
/// and `z = −1` (in that order, appended last).
pub struct DnoSolver {
    grid: Grid2D,
    z_nodes: Vec<f64>,
    bary: Vec<f64>,
    tables: Arc<KernelTables>,
}

impl DnoSolver {
    pub fn new(grid: Grid2D, n_z_nodes: usize) -> Result<Self> {
        if n_z_nodes < 2 {
            return Err(CoreError::Validation(format!(
                "need at least 2 vertical quadrature nodes, got {n_z_nodes}"
            )));
        }
        let (z_nodes, _) = gauss_legendre_on(n_z_nodes, -1.0, 0.0);
        let bary = bary_weights(&z_nodes);
        let key: TableKey = (grid.n(), grid.box_length().to_bits(), n_z_nodes);
        let tables = {
            let mut cache = table_cache().lock().unwrap();
            cache
                .entry(key)
                .or_insert_with(|| Arc::new(build_tables(grid, &z_nodes, &bary)))
                .clone()
        };
        Ok(DnoSolver {
            grid,
            z_nodes,
            bary,
            tables,
        })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    /// Interior (Gauss–Legendre) storage nodes.
    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }

    /// All output rows: storage nodes followed by `z = 0` and `z = −1`.
    pub fn rows(&self) -> &[f64] {
        &self.tables.rows
    }

    /// Flat-bottom linear solution profile at the given vertical nodes:
    /// `∇φ = cosh((z+1)|∇|)/cosh|∇| ∇ψ`, `∂_zφ = sinh((z+1)|∇|)/cosh|∇| |∇|ψ`.
    pub fn linear_profile_at(&self, psi: &SpectralField, z_nodes: &[f64]) -> StripField {
        let psi_x = psi.derivative(0);
        let psi_y = psi.derivative(1);
        let mut grad_x = Vec::with_capacity(z_nodes.len());
        let mut grad_y = Vec::with_capacity(z_nodes.len());
        let mut dz = Vec::with_capacity(z_nodes.len());
        for &z in z_nodes {
            let ch = |r: f64| cosh_ratio(z, r);
            grad_x.push(psi_x.apply_radial_multiplier(ch, 1.0).expect("cosh ratio"));
            grad_y.push(psi_y.apply_radial_multiplier(ch, 1.0).expect("cosh ratio"));
            dz.push(
                psi.apply_radial_multiplier(|r| sinh_ratio(z, r) * r, 0.0)
                    .expect("sinh ratio"),
            );
        }
        StripField {
            z_nodes: z_nodes.to_vec(),
            grad_x,
            grad_y,
            dz,
        }
    }

    /// Linear profile on the solver's full row set.
    pub fn linear_profile(&self, psi: &SpectralField) -> StripField {
        let rows = self.tables.rows.clone();
        self.linear_profile_at(psi, &rows)
    }

    /// Fixed-point sources `g1, g2, g3` at every node of `phi`.
    ///
    /// `g1 = (2h+h² − (z+1)²|∇h|²)/(1+h)²·∂_zφ + (z+1)∇h·∇φ/(1+h)`,
    /// `g2 = (z+1)|∇h|²∂_zφ/(1+h)² − ∇h·∇φ/(1+h)`,
    /// `g3 = (z+1)∇h ∂_zφ/(1+h)`.
    pub fn g_sources(&self, h: &SpectralField, phi: &StripField) -> Result<GSources> {
        check_amplitude(h)?;
        let cp = coeff_phys(h);
        let mut out = GSources {
            g1: Vec::new(),
            g2: Vec::new(),
            g3_x: Vec::new(),
            g3_y: Vec::new(),
        };
        for (i, &z) in phi.z_nodes.iter().enumerate() {
            let s = sources_at(
                self.grid,
                &cp,
                z,
                &phi.grad_x[i],
                &phi.grad_y[i],
                &phi.dz[i],
            );
            out.g1.push(s.g1);
            out.g2.push(s.g2);
            out.g3_x.push(s.g3_x);
            out.g3_y.push(s.g3_y);
        }
        Ok(out)
    }

    /// `∫_{−1}^0 K_i(z, s)·source(s) ds` for a scalar source sampled on the
    /// solver's storage nodes. Returns `(horizontal_x, horizontal_y,
    /// vertical)`; the horizontal pair is the directional factor `iξ/(2|ξ|)`
    /// times the radial kernel part (zero at `ξ = 0` and on Nyquist rows).
    pub fn kernel_apply(
        &self,
        which: KernelKind,
        source: &[SpectralField],
        z: f64,
    ) -> Result<(SpectralField, SpectralField, SpectralField)> {
        if source.len() != self.z_nodes.len() {
            return Err(CoreError::Validation(format!(
                "source has {} nodes, solver stores {}",
                source.len(),
                self.z_nodes.len()
            )));
        }
        if !(-1.0..=0.0).contains(&z) {
            return Err(CoreError::Validation(format!(
                "evaluation depth z = {z} outside [−1, 0]"
            )));
        }
        let n = self.grid.n();
        let reality = source.iter().all(|f| f.is_real());
        let mut out_h = SpectralField::zeros(self.grid, false);
        let mut out_v = SpectralField::zeros(self.grid, reality);
        // Direct quadrature (no tables): panels split at the kink s = z.
        for (a, b) in [(-1.0, z), (z, 0.0)] {
            if b - a < 1e-14 {
                continue;
            }
            let (sn, sw) = gauss_legendre_on(2 * PANEL_NODES, a, b);
            for (&s, &w) in sn.iter().zip(&sw) {
                let basis = lagrange_basis(&self.z_nodes, &self.bary, s);
                for i in 0..n {
                    for j in 0..n {
                        let xi = self.grid.wavevector(i, j);
                        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                        let (kh, kv) = kernel_parts(which, z, s, r);
                        let mut src = Complex64::default();
                        for (q, &lq) in basis.iter().enumerate() {
                            src += source[q].coeffs()[i * n + j] * lq;
                        }
                        out_h.coeffs_mut()[i * n + j] += src * (w * kh);
                        out_v.coeffs_mut()[i * n + j] += src * (w * kv);
                    }
                }
            }
        }
        // Split the horizontal radial accumulator into its two directed
        // components.
        let ny = self.grid.nyquist_index();
        let mut out_x = SpectralField::zeros(self.grid, reality);
        let mut out_y = SpectralField::zeros(self.grid, reality);
        for i in 0..n {
            for j in 0..n {
                let xi = self.grid.wavevector(i, j);
                let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
                if r == 0.0 {
                    continue;
                }
                let acc = out_h.coeffs()[i * n + j];
                if i != ny {
                    out_x.coeffs_mut()[i * n + j] = Complex64::new(0.0, xi[0] / (2.0 * r)) * acc;
                }
                if j != ny {
                    out_y.coeffs_mut()[i * n + j] = Complex64::new(0.0, xi[1] / (2.0 * r)) * acc;
                }
            }
        }
        Ok((out_x, out_y, out_v))
    }

    /// One table-driven contraction: integral contributions at output row
    /// `row` from per-storage-node sources `src_a = g2 + ∇·g3` and `g1`.
    fn contract_row(
        &self,
        row: usize,
        src_a: &[SpectralField],
        g1: &[SpectralField],
    ) -> (SpectralField, SpectralField, SpectralField) {
        let t = &self.tables;
        let n = self.grid.n();
        let ny = self.grid.nyquist_index();
        let mut gx = SpectralField::zeros(self.grid, true);
        let mut gy = SpectralField::zeros(self.grid, true);
        let mut dz = SpectralField::zeros(self.grid, true);
        let a_slices: Vec<&[Complex64]> = src_a.iter().map(|f| f.coeffs()).collect();
        let g_slices: Vec<&[Complex64]> = g1.iter().map(|f| f.coeffs()).collect();
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let ri = t.radius_index[idx];
                let mut sh = Complex64::default();
                let mut sv = Complex64::default();
                for q in 0..t.q {
                    let base = t.weight_base(row, q) + ri;
                    let ca = a_slices[q][idx];
                    let c1 = g_slices[q][idx];
                    sh += ca * t.w_ah[base] + c1 * t.w_bh[base];
                    sv += ca * t.w_av[base] + c1 * t.w_bv[base];
                }
                dz.coeffs_mut()[idx] = sv;
                let xi = self.grid.wavevector(i, j);
                let r = t.radii[ri];
                if r > 0.0 {
                    if i != ny {
                        gx.coeffs_mut()[idx] = Complex64::new(0.0, xi[0] / (2.0 * r)) * sh;
                    }
                    if j != ny {
                        gy.coeffs_mut()[idx] = Complex64::new(0.0, xi[1] / (2.0 * r)) * sh;
                    }
                }
            }
        }
        (gx, gy, dz)
    }

    /// Picard iteration on the integral fixed-point equation.
    ///
    /// Public wrapper returning the full diagnostic report; see
    /// [`Self::solve_core`] for the lean path used inside time stepping.
    pub fn fixed_point_solve(
        &self,
        h: &SpectralField,
        psi: &SpectralField,
        tol: f64,
        max_iter: usize,
    ) -> Result<(StripField, ConvergenceReport)> {
        let (phi, increments) = self.solve_core(h, psi, tol, max_iter, None)?;
        let report = self.build_report(h, psi, &phi, tol, &increments)?;
        Ok((phi, report))
    }

    fn build_report(
        &self,
        h: &SpectralField,
        psi: &SpectralField,
        phi: &StripField,
        tol: f64,
        increments: &[f64],
    ) -> Result<ConvergenceReport> {
        let q = self.z_nodes.len();
        let contraction_factors = increments
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        let laplace_residual = self.laplace_residual(h, phi)?;
        let bottom_residual = phi.dz[q + 1].l2_norm();
        let psi_x = psi.derivative(0);
        let psi_y = psi.derivative(1);
        let dirichlet_residual = (&phi.grad_x[q] - &psi_x)
            .l2_norm()
            .max((&phi.grad_y[q] - &psi_y).l2_norm());
        Ok(ConvergenceReport {
            iterations: increments.len(),
            converged: increments.last().is_some_and(|d| *d < tol) || increments.is_empty(),
            tol,
            increments: increments.to_vec(),
            contraction_factors,
            laplace_residual,
            bottom_residual,
            dirichlet_residual,
        })
    }

    /// The iteration itself; returns the converged strip field (on the full
    /// row set) and the relative increment history.
    pub(crate) fn solve_core(
        &self,
        h: &SpectralField,
        psi: &SpectralField,
        tol: f64,
        max_iter: usize,
        warm: Option<&StripField>,
    ) -> Result<(StripField, Vec<f64>)> {
        check_amplitude(h)?;
        if max_iter < 1 {
            return Err(CoreError::Validation("max_iter must be at least 1".into()));
        }
        let q = self.z_nodes.len();
        let rows = self.tables.rows.clone();
        let profile = self.linear_profile_at(psi, &rows);
        let cp = coeff_phys(h);
        let scale = {
            let mut s: f64 = 0.0;
            for i in 0..rows.len() {
                s = s
                    .max(profile.grad_x[i].l2_norm())
                    .max(profile.grad_y[i].l2_norm())
                    .max(profile.dz[i].l2_norm());
            }
            s.max(f64::MIN_POSITIVE)
        };
        let mut cur = match warm {
            Some(w) if w.z_nodes == rows => w.clone(),
            Some(_) => {
                return Err(CoreError::Validation(
                    "warm start has incompatible vertical nodes".into(),
                ))
            }
            None => profile.clone(),
        };
        let mut increments = Vec::new();
        for _ in 0..max_iter {
            // Sources from the current iterate (full set on storage rows,
            // g1 alone on the boundary rows).
            let mut src_a = Vec::with_capacity(q);
            let mut g1 = Vec::with_capacity(q);
            for i in 0..q {
                let s = sources_at(
                    self.grid,
                    &cp,
                    rows[i],
                    &cur.grad_x[i],
                    &cur.grad_y[i],
                    &cur.dz[i],
                );
                src_a.push(&(&s.g2 + &s.g3_x.derivative(0)) + &s.g3_y.derivative(1));
                g1.push(s.g1);
            }
            let mut next = profile.clone();
            let mut diff: f64 = 0.0;
            for row in 0..rows.len() {
                let (ix, iy, iz) = self.contract_row(row, &src_a, &g1);
                let g1_row = if row < q {
                    g1[row].clone()
                } else {
                    g1_at(
                        self.grid,
                        &cp,
                        rows[row],
                        &cur.grad_x[row],
                        &cur.grad_y[row],
                        &cur.dz[row],
                    )
                };
                next.grad_x[row] = &next.grad_x[row] + &ix;
                next.grad_y[row] = &next.grad_y[row] + &iy;
                next.dz[row] = &(&next.dz[row] + &iz) + &g1_row;
                diff = diff
                    .max((&next.grad_x[row] - &cur.grad_x[row]).l2_norm())
                    .max((&next.grad_y[row] - &cur.grad_y[row]).l2_norm())
                    .max((&next.dz[row] - &cur.dz[row]).l2_norm());
            }
            diff /= scale;
            increments.push(diff);
            cur = next;
            if diff < tol {
                return Ok((cur, increments));
            }
        }
        let history = increments
            .iter()
            .map(|d| format!("{d:.3e}"))
            .collect::<Vec<_>>()
            .join(", ");
        Err(CoreError::Divergence(format!(
            "fixed-point iteration did not contract below {tol:.3e} within {max_iter} \
             iterations; relative increments: [{history}]"
        )))
    }

    /// `G(h)ψ` with the selected backend.
    pub fn dno_apply(
        &self,
        h: &SpectralField,
        psi: &SpectralField,
        backend: &DnoBackend,
    ) -> Result<SpectralField> {
        backend.validate()?;
        match backend {
            DnoBackend::Taylor1 => psi.apply_radial_multiplier(|r| r * r.tanh(), 0.0),
            DnoBackend::Taylor2 => {
                check_amplitude(h)?;
                Ok(&self.taylor1(psi)? + &self.taylor2_correction(h, psi)?)
            }
            DnoBackend::Taylor3 => {
                check_amplitude(h)?;
                let t2 = &self.taylor1(psi)? + &self.taylor2_correction(h, psi)?;
                Ok(&t2 + &self.cubic_by_polarization(h, psi)?)
            }
            DnoBackend::FixedPoint { tol, max_iter } => {
                let (phi, _) = self.solve_core(h, psi, *tol, *max_iter, None)?;
                self.dno_from_strip(h, psi, &phi)
            }
        }
    }

    fn taylor1(&self, psi: &SpectralField) -> Result<SpectralField> {
        psi.apply_radial_multiplier(|r| r * r.tanh(), 0.0)
    }

    /// Quadratic Taylor term `−∇·(h∇ψ) − T(h·Tψ)` with `T = |∇|tanh|∇|`.
    fn taylor2_correction(&self, h: &SpectralField, psi: &SpectralField) -> Result<SpectralField> {
        let t_psi = self.taylor1(psi)?;
        let div = &h.mul_dealiased(&psi.derivative(0)).derivative(0)
            + &h.mul_dealiased(&psi.derivative(1)).derivative(1);
        let t_h_t = h
            .mul_dealiased(&t_psi)
            .apply_radial_multiplier(|r| r * r.tanh(), 0.0)?;
        Ok(&(-1.0 * &div) - &t_h_t)
    }

    /// Cubic term of the expansion (quadratic in `h`, cubic in the joint
    /// state) by polarization of the full operator. With `A(s) = G(s·h)ψ`
    /// the `s²` coefficient is extracted by the Richardson combination
    /// `[16(A(τ) + A(−τ)) − (A(2τ) + A(−2τ)) − 30·A(0)]/(24τ²)` with
    /// `τ = 1/2`, exact up to `O(h⁶)`; `A(0)` is the linear term, no solve
    /// needed. Sampling at `{±h/2, ±h}` keeps every solve inside the
    /// contraction region of the given surface.
    fn cubic_by_polarization(&self, h: &SpectralField, psi: &SpectralField) -> Result<SpectralField> {
        let tol = 1e-13;
        let max_iter = 120;
        let eval = |s: f64| -> Result<SpectralField> {
            let hs = s * h;
            let (phi, _) = self.solve_core(&hs, psi, tol, max_iter, None)?;
            self.dno_from_strip(&hs, psi, &phi)
        };
        let a_p2 = eval(1.0)?;
        let a_m2 = eval(-1.0)?;
        let a_p1 = eval(0.5)?;
        let a_m1 = eval(-0.5)?;
        let a_0 = self.taylor1(psi)?;
        // τ = 1/2: [16(A(τ)+A(−τ)) − (A(2τ)+A(−2τ)) − 30 A(0)]/(24τ²).
        let even_small = &a_p1 + &a_m1;
        let even_large = &a_p2 + &a_m2;
        Ok((1.0 / 6.0) * &(&(&(16.0 * &even_small) - &even_large) - &(30.0 * &a_0)))
    }

    /// `G(h)ψ = (1+|∇h|²)/(1+h)·∂_zφ|_{z=0} − ∇ψ·∇h` from a solved strip.
    pub fn dno_from_strip(
        &self,
        h: &SpectralField,
        psi: &SpectralField,
        phi: &StripField,
    ) -> Result<SpectralField> {
        let top = phi.node_at(0.0);
        if phi.z_nodes[top].abs() > 1e-12 {
            return Err(CoreError::Validation(
                "strip field carries no z = 0 row".into(),
            ));
        }
        let hx = h.derivative(0);
        let hy = h.derivative(1);
        let weight = SpectralField::map_physical_padded(self.grid, &[h, &hx, &hy], |v| {
            (1.0 + v[1] * v[1] + v[2] * v[2]) / (1.0 + v[0])
        });
        let normal = weight.mul_dealiased(&phi.dz[top]);
        let tangential = &psi.derivative(0).mul_dealiased(&hx) + &psi.derivative(1).mul_dealiased(&hy);
        Ok(&normal - &tangential)
    }

    /// Coefficients of the flattened Laplace operator at the given nodes.
    pub fn strip_coefficients(&self, h: &SpectralField, z_nodes: &[f64]) -> Result<StripCoefficients> {
        check_amplitude(h)?;
        let hx = h.derivative(0);
        let hy = h.derivative(1);
        let lap = h.laplacian();
        let mut out = StripCoefficients {
            z_nodes: z_nodes.to_vec(),
            a: Vec::new(),
            b_x: Vec::new(),
            b_y: Vec::new(),
            c: Vec::new(),
        };
        for &z in z_nodes {
            let zp = z + 1.0;
            out.a.push(SpectralField::map_physical_padded(
                self.grid,
                &[h, &hx, &hy],
                |v| {
                    let g2 = v[1] * v[1] + v[2] * v[2];
                    let w = 1.0 + v[0];
                    (1.0 + zp * zp * g2) / (w * w)
                },
            ));
            out.b_x.push(SpectralField::map_physical_padded(
                self.grid,
                &[h, &hx],
                |v| -2.0 * zp * v[1] / (1.0 + v[0]),
            ));
            out.b_y.push(SpectralField::map_physical_padded(
                self.grid,
                &[h, &hy],
                |v| -2.0 * zp * v[1] / (1.0 + v[0]),
            ));
            out.c.push(SpectralField::map_physical_padded(
                self.grid,
                &[h, &hx, &hy, &lap],
                |v| {
                    let g2 = v[1] * v[1] + v[2] * v[2];
                    let w = 1.0 + v[0];
                    -zp * v[3] / w + 2.0 * zp * g2 / (w * w)
                },
            ));
        }
        Ok(out)
    }

    /// Max over interior nodes of `‖Δ_xφ + ã∂_z²φ + b̃·∇∂_zφ + c̃∂_zφ‖_{L²}`.
    ///
    /// The vertical second derivative is obtained by barycentric
    /// differentiation of `∂_zφ` across all rows of `phi`.
    pub fn laplace_residual(&self, h: &SpectralField, phi: &StripField) -> Result<f64> {
        let nodes = &phi.z_nodes;
        let bw = bary_weights(nodes);
        let d = diff_matrix(nodes, &bw);
        let q = nodes.len();
        let coeffs = self.strip_coefficients(h, nodes)?;
        let mut worst: f64 = 0.0;
        for i in 0..q {
            // Only score strictly interior rows.
            if nodes[i] <= -1.0 + 1e-12 || nodes[i] >= -1e-12 {
                continue;
            }
            let mut dz2 = SpectralField::zeros(self.grid, true);
            for j in 0..q {
                dz2 = &dz2 + &(d[i * q + j] * &phi.dz[j]);
            }
            let lap_x = &phi.grad_x[i].derivative(0) + &phi.grad_y[i].derivative(1);
            let res = &(&lap_x + &coeffs.a[i].mul_dealiased(&dz2))
                + &(&(&coeffs.b_x[i].mul_dealiased(&phi.dz[i].derivative(0))
                    + &coeffs.b_y[i].mul_dealiased(&phi.dz[i].derivative(1)))
                    + &coeffs.c[i].mul_dealiased(&phi.dz[i]));
            worst = worst.max(res.l2_norm());
        }
        Ok(worst)
    }
}

// ---------------------------------------------------------------------------
// Distinguished scalar symbols.
// ---------------------------------------------------------------------------

/// The constant `c₊ = −i/2` entering the complex formulation.
pub const C_PLUS: Complex64 = Complex64 { re: 0.0, im: -0.5 };

/// Which distinguished scalar symbol to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialSymbol {
    /// Leading quadratic symbol `c(ξ) = (c₊/2)λ̃(|ξ|²)|ξ|²(1 − tanh²|ξ|)`.
    C,
    /// Bulk cubic kernel integral `d(ξ)` (real).
    D,
    /// Leading cubic symbol `e(ξ) = (c₊/4)d(ξ) − i·c(ξ)²/Λ(|ξ|)`.
    E,
    /// The degenerate-phase coefficient `c̃(|ξ|²)` (real).
    CTilde,
}

/// Default node count for the `d(ξ)` double quadrature.
const D_SYMBOL_NODES: usize = 48;

fn c_symbol(r: f64) -> Complex64 {
    let t = r.tanh();
    C_PLUS * 0.5 * DispersionLaw::lambda_tilde(r * r) * r * r * (1.0 - t * t)
}

/// `d(ξ)` by split Gauss–Legendre quadrature over `[−1,0]²` with `m` nodes
/// per direction (the integrand kinks at `z = s`).
pub fn d_symbol_quadrature(r: f64, m: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let d = 1.0 + (-2.0 * r).exp();
    // −sinh((z+1)r)/cosh r and sinh((s+1)r)/cosh r in decaying form.
    let f1 = |z: f64| ((-(z + 2.0) * r).exp() - (z * r).exp()) / d;
    let f2 = |s: f64| ((s * r).exp() - (-(s + 2.0) * r).exp()) / d;
    let bracket = |z: f64, s: f64| {
        (((z + s - 2.0) * r).exp()
            + ((z - s - 2.0) * r).exp()
            + ((s - z - 2.0) * r).exp()
            + (-(z + s + 2.0) * r).exp())
            / d
            - (-(z - s).abs() * r).exp()
            - ((z + s) * r).exp()
    };
    let (zn, zw) = gauss_legendre_on(m, -1.0, 0.0);
    let mut double = 0.0;
    for (&z, &wz) in zn.iter().zip(&zw) {
        for (a, b) in [(-1.0, z), (z, 0.0)] {
            if b - a < 1e-14 {
                continue;
            }
            let (sn, sw) = gauss_legendre_on(m, a, b);
            for (&s, &ws) in sn.iter().zip(&sw) {
                double += wz * ws * f1(z) * f2(s) * bracket(z, s);
            }
        }
    }
    let mut single = 0.0;
    for (&s, &ws) in zn.iter().zip(&zw) {
        let v = f2(s);
        single += ws * v * v;
    }
    2.0 * double * r * r * r - single * r * r + r.tanh() * r
}

/// Evaluates one of the distinguished scalar symbols at radius `r ≥ 0`.
pub fn special_symbol(which: SpecialSymbol, r: f64) -> Complex64 {
    assert!(r >= 0.0, "symbol radius must be non-negative");
    match which {
        SpecialSymbol::C => c_symbol(r),
        SpecialSymbol::D => Complex64::new(d_symbol_quadrature(r, D_SYMBOL_NODES), 0.0),
        SpecialSymbol::E => {
            if r == 0.0 {
                // c(ξ)²/Λ(|ξ|) → 0 like |ξ|²/16 and d(0) = 0.
                return Complex64::default();
            }
            let c = c_symbol(r);
            let d = d_symbol_quadrature(r, D_SYMBOL_NODES);
            C_PLUS * 0.25 * d - Complex64::i() * c * c / DispersionLaw::capital_lambda(r)
        }
        SpecialSymbol::CTilde => Complex64::new(DispersionLaw::c_tilde(r * r), 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::slope_fit;
    use std::f64::consts::TAU;

    fn grid32() -> Grid2D {
        Grid2D::new(32, TAU).unwrap()
    }

    fn cos_x1(grid: Grid2D) -> SpectralField {
        SpectralField::from_physical_fn(grid, |x, _| x.cos())
    }

    /// Small real surface with two modes (breaks symmetry in both axes).
    fn bump(grid: Grid2D, eps: f64) -> SpectralField {
        SpectralField::from_physical_fn(grid, |x, y| {
            eps * ((x).cos() + 0.6 * (x + 2.0 * y).sin())
        })
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre_on(8, -1.0, 0.0);
        // ∫_{−1}^0 z^k dz = (−1)^k/(k+1); exact up to degree 15.
        for k in 0..=15u32 {
            let s: f64 = x.iter().zip(&w).map(|(z, wi)| wi * z.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
            assert!((s - exact).abs() < 1e-13, "degree {k}: {s} vs {exact}");
        }
    }

    #[test]
    fn differentiation_matrix_exact_on_polynomials() {
        let (z, _) = gauss_legendre_on(6, -1.0, 0.0);
        let w = bary_weights(&z);
        let d = diff_matrix(&z, &w);
        for (i, &zi) in z.iter().enumerate() {
            let dv: f64 = z
                .iter()
                .enumerate()
                .map(|(j, &zj)| d[i * z.len() + j] * (zj * zj * zj - 2.0 * zj))
                .sum();
            assert!((dv - (3.0 * zi * zi - 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn flat_bottom_oracle_all_backends() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 8).unwrap();
        let h = SpectralField::zeros(grid, true);
        let psi = cos_x1(grid);
        let oracle = psi
            .apply_radial_multiplier(|r| r * r.tanh(), 0.0)
            .unwrap();
        for backend in [
            DnoBackend::Taylor1,
            DnoBackend::Taylor2,
            DnoBackend::Taylor3,
            DnoBackend::FixedPoint {
                tol: 1e-12,
                max_iter: 10,
            },
        ] {
            let g = solver.dno_apply(&h, &psi, &backend).unwrap();
            assert!(
                (&g - &oracle).l2_norm() < 1e-11,
                "backend {backend:?} misses tanh(1)cos x₁"
            );
        }
        // Scalar value: G(0)cos x₁ = tanh(1)cos x₁.
        let g = solver
            .dno_apply(&h, &psi, &DnoBackend::Taylor1)
            .unwrap();
        let c = g.coeff_at_offset(1, 0).re;
        assert!((c - 0.5 * 1f64.tanh()).abs() < 1e-13);
    }

    #[test]
    fn flat_bottom_fixed_point_converges_immediately() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 8).unwrap();
        let h = SpectralField::zeros(grid, true);
        let psi = cos_x1(grid);
        let (phi, report) = solver.fixed_point_solve(&h, &psi, 1e-12, 5).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(report.bottom_residual < 1e-12);
        assert!(report.dirichlet_residual < 1e-12);
        // ∂_zφ(·,0) = |∇|tanh|∇|ψ for the linear profile.
        let top = phi.node_at(0.0);
        let oracle = psi.apply_radial_multiplier(|r| r * r.tanh(), 0.0).unwrap();
        assert!((&phi.dz[top] - &oracle).l2_norm() < 1e-13);
    }

    #[test]
    fn g1_vanishes_at_bottom() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 8).unwrap();
        let h = bump(grid, 1e-2);
        let psi = cos_x1(grid);
        let phi = solver.linear_profile_at(&psi, &[-1.0, -0.5, 0.0]);
        let sources = solver.g_sources(&h, &phi).unwrap();
        assert!(sources.g1[0].l2_norm() < 1e-12, "g1(−1) must vanish");
        assert!(sources.g1[1].l2_norm() > 1e-6, "interior g1 is nontrivial");
    }

    #[test]
    fn g_sources_vanish_for_flat_surface() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 6).unwrap();
        let h = SpectralField::zeros(grid, true);
        let psi = cos_x1(grid);
        let phi = solver.linear_profile(&psi);
        let s = solver.g_sources(&h, &phi).unwrap();
        for i in 0..phi.node_count() {
            assert!(s.g1[i].l2_norm() < 1e-14);
            assert!(s.g2[i].l2_norm() < 1e-14);
            assert!(s.g3_x[i].l2_norm() < 1e-14);
            assert!(s.g3_y[i].l2_norm() < 1e-14);
        }
    }

    #[test]
    fn g1_quadratic_truncation_slope() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 6).unwrap();
        let psi = cos_x1(grid);
        let z = -0.3;
        let phi = solver.linear_profile_at(&psi, &[z]);
        let h1 = bump(grid, 1.0);
        let eps_list = [1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2];
        let mut residuals = Vec::new();
        for &eps in &eps_list {
            let h = eps * &h1;
            let s = solver.g_sources(&h, &phi).unwrap();
            // Linear-in-h truncation: 2h·∂_zφ + (z+1)∇h·∇φ.
            let lin = &(2.0 * &h.mul_dealiased(&phi.dz[0]))
                + &((z + 1.0)
                    * &(&h.derivative(0).mul_dealiased(&phi.grad_x[0])
                        + &h.derivative(1).mul_dealiased(&phi.grad_y[0])));
            residuals.push((&s.g1[0] - &lin).l2_norm());
        }
        let fit = slope_fit(&eps_list, &residuals);
        assert!(fit.slope >= 2.0 - 0.05, "slope {} < 2", fit.slope);
    }

    #[test]
    fn k2_horizontal_vanishes_at_surface() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 6).unwrap();
        let psi = cos_x1(grid);
        let source: Vec<SpectralField> = solver
            .z_nodes()
            .iter()
            .map(|&z| (1.0 + z) * &psi)
            .collect();
        let (kx, ky, _) = solver.kernel_apply(KernelKind::K2, &source, 0.0).unwrap();
        assert!(kx.l2_norm() < 1e-14);
        assert!(ky.l2_norm() < 1e-14);
    }

    #[test]
    fn kernel_quadrature_converges_under_node_doubling() {
        let grid = grid32();
        let coarse = DnoSolver::new(grid, 10).unwrap();
        let fine = DnoSolver::new(grid, 20).unwrap();
        // Smooth band-limited source: (1+z)²·(cos x₁ + low modes).
        let base = SpectralField::from_physical_fn(grid, |x, y| x.cos() + 0.5 * (x + y).cos());
        let make = |nodes: &[f64]| -> Vec<SpectralField> {
            nodes.iter().map(|&z| (1.0 + z) * (1.0 + z) * &base).collect()
        };
        let z = -0.37;
        for which in [KernelKind::K1, KernelKind::K2, KernelKind::K3] {
            let a = coarse.kernel_apply(which, &make(coarse.z_nodes()), z).unwrap();
            let b = fine.kernel_apply(which, &make(fine.z_nodes()), z).unwrap();
            for (fa, fb) in [(&a.0, &b.0), (&a.1, &b.1), (&a.2, &b.2)] {
                assert!(
                    (fa - fb).l2_norm() < 1e-10,
                    "{which:?} quadrature unstable under node doubling"
                );
            }
        }
    }

    #[test]
    fn fixed_point_contracts_and_satisfies_pde() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 12).unwrap();
        let h = SpectralField::from_physical_fn(grid, |x, _| 1e-2 * x.cos());
        let psi = cos_x1(grid);
        let (_, report) = solver.fixed_point_solve(&h, &psi, 1e-12, 12).unwrap();
        assert!(report.converged);
        // Measured: 7 Picard updates from the linear profile at tol 1e−12
        // (the first update carries the O(ε) correction itself).
        assert!(report.iterations <= 7, "iterations {}", report.iterations);
        for f in &report.contraction_factors {
            assert!(*f < 0.1, "contraction factor {f} too large at ε = 1e−2");
        }
        assert!(
            report.laplace_residual < 1e-8,
            "Laplace residual {:.3e}",
            report.laplace_residual
        );
        assert!(report.bottom_residual < 1e-10);
        assert!(report.dirichlet_residual < 1e-10);
    }

    #[test]
    fn divergence_reported_for_large_amplitude() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 6).unwrap();
        let h = bump(grid, 0.6);
        let psi = cos_x1(grid);
        let err = solver.fixed_point_solve(&h, &psi, 1e-12, 4).unwrap_err();
        assert!(format!("{err}").contains("degeneracy"));
        // Below the hard amplitude cap but too tight a budget: divergence
        // report carries the increment history.
        let h = bump(grid, 0.3);
        let err = solver.fixed_point_solve(&h, &psi, 1e-14, 2).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("increments"), "unexpected error: {msg}");
    }

    #[test]
    fn backend_hierarchy_slopes() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 12).unwrap();
        let psi = cos_x1(grid);
        let h1 = bump(grid, 1.0);
        let eps_list = [1.25e-2, 2.5e-2, 5e-2, 1e-1];
        let fp = DnoBackend::FixedPoint {
            tol: 1e-13,
            max_iter: 40,
        };
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        let mut r3 = Vec::new();
        for &eps in &eps_list {
            // The whole state scales with ε: Λ_k ~ h^{k−1}ψ ~ ε^k, so the
            // residual of the order-k truncation decays like ε^{k+1}.
            let h = eps * &h1;
            let psi_eps = eps * &psi;
            let exact = solver.dno_apply(&h, &psi_eps, &fp).unwrap();
            for (backend, acc) in [
                (DnoBackend::Taylor1, &mut r1),
                (DnoBackend::Taylor2, &mut r2),
                (DnoBackend::Taylor3, &mut r3),
            ] {
                let g = solver.dno_apply(&h, &psi_eps, &backend).unwrap();
                acc.push((&g - &exact).l2_norm());
            }
        }
        let s1 = slope_fit(&eps_list, &r1).slope;
        let s2 = slope_fit(&eps_list, &r2).slope;
        let s3 = slope_fit(&eps_list, &r3).slope;
        assert!((s1 - 2.0).abs() < 0.2, "Taylor1 residual slope {s1}");
        assert!((s2 - 3.0).abs() < 0.2, "Taylor2 residual slope {s2}");
        assert!((s3 - 4.0).abs() < 0.35, "Taylor3 residual slope {s3}");
    }

    #[test]
    fn zero_mode_vanishes_for_all_backends() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 10).unwrap();
        let h = bump(grid, 3e-2);
        let psi = SpectralField::from_physical_fn(grid, |x, y| {
            0.3 * x.cos() + 0.2 * (2.0 * y).sin() + 0.1 * (x - y).cos()
        });
        for backend in [
            DnoBackend::Taylor1,
            DnoBackend::Taylor2,
            DnoBackend::Taylor3,
            DnoBackend::FixedPoint {
                tol: 1e-13,
                max_iter: 40,
            },
        ] {
            let g = solver.dno_apply(&h, &psi, &backend).unwrap();
            assert!(
                g.zero_mode().norm() < 1e-11,
                "zero mode {:.3e} for {backend:?}",
                g.zero_mode().norm()
            );
        }
    }

    #[test]
    fn strip_coefficients_flat_limit() {
        let grid = grid32();
        let solver = DnoSolver::new(grid, 4).unwrap();
        let h = SpectralField::zeros(grid, true);
        let c = solver.strip_coefficients(&h, &[-0.5]).unwrap();
        let one = SpectralField::from_physical_fn(grid, |_, _| 1.0);
        assert!((&c.a[0] - &one).l2_norm() < 1e-13);
        assert!(c.b_x[0].l2_norm() < 1e-13);
        assert!(c.b_y[0].l2_norm() < 1e-13);
        assert!(c.c[0].l2_norm() < 1e-13);
    }

    #[test]
    fn special_symbol_oracles() {
        // c(1) = (−i/4)·Λ̃(1)·(1 − tanh²1) ≈ −0.120318 i.
        let c1 = special_symbol(SpecialSymbol::C, 1.0);
        assert!(c1.re.abs() < 1e-15);
        let tilde = 1.0 / 1f64.tanh().sqrt();
        let expect = -0.25 * tilde * (1.0 - 1f64.tanh().powi(2));
        assert!((c1.im - expect).abs() < 1e-12);
        assert!((c1.im + 0.120318).abs() < 1e-5);
        // Decay at large radius.
        assert!(special_symbol(SpecialSymbol::C, 50.0).norm() < 1e-30);
        // c̃(0) = −2.
        assert!((special_symbol(SpecialSymbol::CTilde, 0.0).re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn d_symbol_quadrature_stable() {
        for r in [0.5, 2.0, 10.0] {
            let a = d_symbol_quadrature(r, D_SYMBOL_NODES);
            let b = d_symbol_quadrature(r, 2 * D_SYMBOL_NODES);
            assert!((a - b).abs() < 1e-8, "d({r}) unstable: {a} vs {b}");
            assert!(a.is_finite());
        }
        assert_eq!(d_symbol_quadrature(0.0, 16), 0.0);
    }

    #[test]
    fn e_symbol_finite_and_zero_at_origin() {
        assert_eq!(special_symbol(SpecialSymbol::E, 0.0), Complex64::default());
        for r in [1e-8, 1e-3, 0.5, 3.0, 40.0] {
            let e = special_symbol(SpecialSymbol::E, r);
            assert!(e.re.abs() < 1e-15, "e must be purely imaginary, got {e}");
            assert!(e.is_finite());
        }
        // Continuity near the origin: e(r) → 0.
        assert!(special_symbol(SpecialSymbol::E, 1e-6).norm() < 1e-10);
    }
}
