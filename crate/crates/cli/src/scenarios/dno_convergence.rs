//! Amplitude sweep of the Dirichlet–Neumann backend discrepancy
//! `‖FixedPoint − Taylor2‖_{L²}`; the residual is the cubic-and-higher
//! tail, so the fitted log-log slope is 3. Emits `residuals.csv`,
//! `summary.json`, and the manifest.

use capwave_core::dno::{DnoBackend, DnoSolver};
use capwave_core::error::Result;
use capwave_core::report::{slope_fit, SlopeFit};
use capwave_core::spectral::{Grid2D, SpectralField};
use serde::{Deserialize, Serialize};

use crate::artifact::Cell;
use crate::config::{geometric, ConstantsBlock};
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct DnoConvergenceConfig {
    /// Grid points per axis (power of two).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub box_len: f64,
    /// Vertical Chebyshev nodes of the strip solver.
    #[arg(long, default_value_t = 16)]
    pub z_nodes: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 7)]
    pub points: usize,
    /// Fixed-point solve tolerance (must sit below the smallest residual).
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    fit: SlopeFit,
    config: &'a DnoConvergenceConfig,
}

/// Shared sweep driver (also used by the acceptance suite): returns
/// `(ε, residual)` pairs and the fitted slope.
pub fn sweep(cfg: &DnoConvergenceConfig) -> Result<(Vec<(f64, f64)>, SlopeFit)> {
    let grid = Grid2D::new(cfg.n, cfg.box_len)?;
    let solver = DnoSolver::new(grid, cfg.z_nodes)?;
    let fixed = DnoBackend::FixedPoint {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    fixed.validate()?;
    let k = std::f64::consts::TAU / cfg.box_len;
    let h0 = SpectralField::from_physical_fn(grid, |x, y| {
        (k * x).cos() + 0.4 * (k * (x + y)).sin()
    });
    let psi0 = SpectralField::from_physical_fn(grid, |x, y| {
        0.7 * (k * (2.0 * x - y)).cos() + 0.5 * (k * y).sin()
    });

    let eps = geometric(cfg.eps_min, cfg.eps_max, cfg.points)?;
    let mut pairs = Vec::new();
    for &e in &eps {
        let h = e * &h0;
        let psi = e * &psi0;
        let g_fp = solver.dno_apply(&h, &psi, &fixed)?;
        let g_t2 = solver.dno_apply(&h, &psi, &DnoBackend::Taylor2)?;
        pairs.push((e, (&g_fp - &g_t2).l2_norm()));
    }
    let residuals: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let fit = slope_fit(&eps, &residuals);
    Ok((pairs, fit))
}

pub fn run(common: &CommonArgs, flags: &DnoConvergenceConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let (pairs, fit) = sweep(&cfg)?;
    let rows: Vec<Vec<Cell>> = pairs
        .iter()
        .map(|&(e, r)| vec![Cell::F(e), Cell::F(r)])
        .collect();
    let summary = SweepSummary { fit, config: &cfg };

    let mut em = emitter_for(common, "dno-convergence")?;
    em.write_csv("residuals.csv", &["eps", "residual_l2"], &rows)?;
    em.write_json("summary.json", &summary)?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("dno-convergence", &cfg)?;
    golden_check(common, &out_dir)
}
