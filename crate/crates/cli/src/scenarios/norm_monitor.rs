//! Weighted-norm diagnostics of a configurable modulated-Gaussian profile:
//! the Z₁ band table, Z₂ vector-field parts, and the W^{γ,b} total. Emits
//! `norm_report.json`, `z2_report.json`, and the manifest.

use capwave_core::error::Result;
use capwave_core::norms::{norm_report, z2_norm};
use capwave_core::spectral::{Grid2D, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ConstantsBlock;
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct NormMonitorConfig {
    /// Grid points per axis (power of two).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 8.0 * std::f64::consts::PI)]
    pub box_len: f64,
    /// Gaussian width of the profile.
    #[arg(long, default_value_t = 1.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Integer lattice mode of the plane-wave modulation (x component).
    #[arg(long, default_value_t = 2)]
    pub mod_m1: i64,
    /// Integer lattice mode of the plane-wave modulation (y component).
    #[arg(long, default_value_t = 0)]
    pub mod_m2: i64,
    /// W-norm exponent γ (default matches the regularity weight).
    #[arg(long, default_value_t = 6.0)]
    pub gamma: f64,
    /// W-norm exponent b; defaults to 1 + α.
    #[arg(long, default_value_t = 1.1)]
    pub b: f64,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

/// Modulated Gaussian `A·e^{i m·kx}·exp(−|x−c|²/2σ²)` used as the probe
/// profile; the modulation places its spectrum on the band of `m`.
pub fn probe_profile(grid: Grid2D, cfg: &NormMonitorConfig) -> SpectralField {
    let c = cfg.box_len / 2.0;
    let s2 = 2.0 * cfg.sigma * cfg.sigma;
    let k = std::f64::consts::TAU / cfg.box_len;
    let (m1, m2) = (cfg.mod_m1 as f64, cfg.mod_m2 as f64);
    let amp = cfg.amplitude;
    let n = grid.n();
    let dx = cfg.box_len / n as f64;
    let mut samples = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * dx, j as f64 * dx);
            let env = amp * (-((x - c) * (x - c) + (y - c) * (y - c)) / s2).exp();
            let phase = k * (m1 * x + m2 * y);
            samples.push(Complex64::from_polar(env, phase));
        }
    }
    SpectralField::from_physical_complex(grid, samples, false)
}

pub fn run(common: &CommonArgs, flags: &NormMonitorConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let grid = Grid2D::new(cfg.n, cfg.box_len)?;
    let g = probe_profile(grid, &cfg);
    let report = norm_report(&g, cfg.gamma, cfg.b)?;
    let z2 = z2_norm(&g);

    #[derive(Serialize)]
    struct Summary<'a, T: Serialize> {
        report: &'a T,
        config: &'a NormMonitorConfig,
    }

    let mut em = emitter_for(common, "norm-monitor")?;
    em.write_json(
        "norm_report.json",
        &Summary {
            report: &report,
            config: &cfg,
        },
    )?;
    em.write_json(
        "z2_report.json",
        &Summary {
            report: &z2,
            config: &cfg,
        },
    )?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("norm-monitor", &cfg)?;
    golden_check(common, &out_dir)
}
