//! Full capillary evolution with conservation (and optional Z-norm)
//! monitoring. Emits `series.csv`, `summary.json`, and the manifest.

use capwave_core::dispersion::linear_propagate;
use capwave_core::error::Result;
use capwave_core::evolution::{psi_tilde_from, to_complex, Evolver, RhsMode, SurfaceState};
use capwave_core::norms::{z1_norm, z2_norm};
use capwave_core::spectral::{Grid2D, SpectralField};
use serde::{Deserialize, Serialize};

use crate::artifact::Cell;
use crate::config::{parse_backend, parse_integrator, ConstantsBlock};
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// Grid points per axis (power of two).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Periodic box side length.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub box_len: f64,
    /// Initial-data amplitude ε.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Dirichlet–Neumann backend: taylor1 | taylor2 | taylor3 | fixed-point.
    #[arg(long, default_value = "taylor2")]
    pub backend: String,
    /// Fixed-point backend tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Fixed-point backend iteration cap.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Vertical Chebyshev nodes of the strip solver.
    #[arg(long, default_value_t = 12)]
    pub z_nodes: usize,
    /// Time integrator: rk4 | integrating-factor.
    #[arg(long, default_value = "integrating-factor")]
    pub integrator: String,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    /// Steps between diagnostic samples.
    #[arg(long, default_value_t = 100)]
    pub cadence: usize,
    /// Also record Z₁/Z₂ norms of the linear profile each sample
    /// (adds two columns; costs two norm sweeps per sample).
    #[arg(long, default_value_t = false)]
    pub z_norms: bool,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

#[derive(Serialize)]
struct EvolveSummary<'a> {
    samples: usize,
    energy_initial: f64,
    energy_final: f64,
    energy_drift_rel: f64,
    momentum_initial: f64,
    momentum_final: f64,
    momentum_drift_abs: f64,
    config: &'a EvolveConfig,
}

/// Deterministic two-mode initial data at amplitude ε, scaled to the box.
pub fn initial_state(grid: Grid2D, eps: f64) -> Result<SurfaceState> {
    let k = std::f64::consts::TAU / grid.box_length();
    let h = SpectralField::from_physical_fn(grid, |x, y| {
        eps * ((k * x).cos() + 0.5 * (k * (x + 2.0 * y)).sin())
    });
    let psi = SpectralField::from_physical_fn(grid, |x, y| {
        eps * (0.8 * (k * x).sin() + 0.4 * (k * (y - x)).cos())
    });
    SurfaceState::new(h, psi, 0.0)
}

/// `(Z₁, Z₂)` of the linear profile `g = e^{−itΛ}u` of the state's complex
/// variable (also used by the acceptance suite).
pub fn profile_norms(state: &SurfaceState) -> (f64, f64) {
    let psi_tilde = psi_tilde_from(&state.h, &state.psi);
    let u = to_complex(&state.h, &psi_tilde, state.time);
    let g = linear_propagate(&u.u, state.time, -1.0);
    (z1_norm(&g).z1_total, z2_norm(&g).total)
}

pub fn run(common: &CommonArgs, flags: &EvolveConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let grid = Grid2D::new(cfg.n, cfg.box_len)?;
    let backend = parse_backend(&cfg.backend, cfg.tol, cfg.max_iter)?;
    let integrator = parse_integrator(&cfg.integrator)?;
    let mut evolver = Evolver::new(grid, cfg.z_nodes, RhsMode::Full(backend), integrator)?;
    let mut state = initial_state(grid, cfg.eps)?;

    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let cadence = cfg.cadence.max(1);
    let mut header = vec![
        "t",
        "energy",
        "momentum",
        "quadratic_energy",
        "h_sup",
        "psi_sup",
    ];
    if cfg.z_norms {
        header.push("z1");
        header.push("z2");
    }
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut sample = |state: &SurfaceState,
                      evolver: &mut Evolver,
                      rows: &mut Vec<Vec<Cell>>|
     -> Result<()> {
        let d = evolver.diagnostics(state)?;
        let mut row = vec![
            Cell::F(state.time),
            Cell::F(d.energy),
            Cell::F(d.momentum),
            Cell::F(d.quadratic_energy),
            Cell::F(state.h.sup_norm()),
            Cell::F(state.psi.sup_norm()),
        ];
        if cfg.z_norms {
            let (z1, z2) = profile_norms(state);
            row.push(Cell::F(z1));
            row.push(Cell::F(z2));
        }
        rows.push(row);
        diagnostics.push(d);
        Ok(())
    };

    sample(&state, &mut evolver, &mut rows)?;
    for step in 1..=steps {
        state = evolver.step(&state, cfg.dt)?;
        if step % cadence == 0 || step == steps {
            sample(&state, &mut evolver, &mut rows)?;
        }
    }

    let first = diagnostics.first().expect("at least the initial sample");
    let last = diagnostics.last().expect("at least the initial sample");
    let denom = first.energy.abs().max(f64::MIN_POSITIVE);
    let summary = EvolveSummary {
        samples: rows.len(),
        energy_initial: first.energy,
        energy_final: last.energy,
        energy_drift_rel: (last.energy - first.energy).abs() / denom,
        momentum_initial: first.momentum,
        momentum_final: last.momentum,
        momentum_drift_abs: (last.momentum - first.momentum).abs(),
        config: &cfg,
    };

    let mut em = emitter_for(common, "evolve")?;
    em.write_csv("series.csv", &header, &rows)?;
    em.write_json("summary.json", &summary)?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("evolve", &cfg)?;
    golden_check(common, &out_dir)
}
