//! Toy quadratic Schrödinger run probing the resonance dichotomy: the
//! `v v̄` interaction is time-resonant on the zero-output line, so the
//! low-frequency profile grows linearly; the `vv` / `v̄v̄` interactions
//! oscillate and stay bounded. Emits `series.csv`, `summary.json`, and the
//! manifest.

use std::sync::Arc;

use capwave_core::error::Result;
use capwave_core::evolution::{toy_default_symbol, toy_step, BilinearSymbol};
use capwave_core::report::{slope_fit, SlopeFit};
use capwave_core::spectral::{Grid2D, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::artifact::Cell;
use crate::config::ConstantsBlock;
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ToySchrodingerConfig {
    /// Grid points per axis (power of two).
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub box_len: f64,
    /// Initial-data amplitude ε.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    #[arg(long, default_value_t = 30.0)]
    pub t_final: f64,
    /// Steps between samples.
    #[arg(long, default_value_t = 25)]
    pub cadence: usize,
    /// Drop the `v v̄` interaction (the growth channel), keeping `vv` and
    /// `v̄v̄` — the bounded comparison run.
    #[arg(long, default_value_t = false)]
    pub q1_free: bool,
    /// Fit window start for the growth slope.
    #[arg(long, default_value_t = 1.0)]
    pub fit_t_min: f64,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

#[derive(Serialize)]
pub struct ToySummary<'a> {
    /// Log-log fit of `|v̂(0)|` against `t` over `t ≥ fit_t_min` (slope 1
    /// signals the secular growth of the resonant channel).
    pub zero_mode_fit: SlopeFit,
    /// `max_t low_band_sup / low_band_sup(0)` — boundedness metric for the
    /// comparison run.
    pub low_band_growth_factor: f64,
    pub config: &'a ToySchrodingerConfig,
}

/// Mean-zero complex initial data at amplitude ε, scaled to the box.
pub fn initial_profile(grid: Grid2D, eps: f64) -> SpectralField {
    let k = std::f64::consts::TAU / grid.box_length();
    let re = SpectralField::from_physical_fn(grid, |x, y| {
        eps * ((k * x).cos() + 0.5 * (k * (x + y)).cos())
    });
    let im = SpectralField::from_physical_fn(grid, |_, y| eps * 0.7 * (k * y).cos());
    &re.into_complex() + &(Complex64::i() * &im.into_complex())
}

/// Sup norm of the low-band (`|ξ| ≤ 1.5`) part of the linear profile
/// `e^{−itΔ}v` (phases undone mode by mode).
fn low_band_profile_sup(v: &SpectralField, t: f64) -> f64 {
    v.map_coeffs(false, |xi, c| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        if r2 <= 1.5 * 1.5 {
            c * Complex64::from_polar(1.0, t * r2)
        } else {
            Complex64::default()
        }
    })
    .sup_norm()
}

pub struct ToyRun {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub ts: Vec<f64>,
    pub zero_abs: Vec<f64>,
    pub low_sup: Vec<f64>,
}

/// Shared driver (also used by the acceptance suite).
pub fn run_series(cfg: &ToySchrodingerConfig) -> Result<ToyRun> {
    let grid = Grid2D::new(cfg.n, cfg.box_len)?;
    let sym = toy_default_symbol();
    let zero: BilinearSymbol = BilinearSymbol::Dense(Arc::new(|_, _| Complex64::default()));
    let q1 = if cfg.q1_free { &zero } else { &sym };
    let mut v = initial_profile(grid, cfg.eps);
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let cadence = cfg.cadence.max(1);

    let mut run = ToyRun {
        header: vec!["t", "zero_mode_abs", "low_band_sup", "sup_norm"],
        rows: Vec::new(),
        ts: Vec::new(),
        zero_abs: Vec::new(),
        low_sup: Vec::new(),
    };
    let sample = |v: &SpectralField, t: f64, run: &mut ToyRun| {
        let z = v.zero_mode().norm();
        let low = low_band_profile_sup(v, t);
        run.rows.push(vec![
            Cell::F(t),
            Cell::F(z),
            Cell::F(low),
            Cell::F(v.sup_norm()),
        ]);
        run.ts.push(t);
        run.zero_abs.push(z);
        run.low_sup.push(low);
    };
    sample(&v, 0.0, &mut run);
    for step in 1..=steps {
        v = toy_step(&v, cfg.dt, q1, &sym, &sym)?;
        if step % cadence == 0 || step == steps {
            sample(&v, step as f64 * cfg.dt, &mut run);
        }
    }
    Ok(run)
}

pub fn summarize<'a>(run: &ToyRun, cfg: &'a ToySchrodingerConfig) -> ToySummary<'a> {
    let (ts, zs): (Vec<f64>, Vec<f64>) = run
        .ts
        .iter()
        .zip(&run.zero_abs)
        .filter(|(t, _)| **t >= cfg.fit_t_min)
        .map(|(t, z)| (*t, *z))
        .unzip();
    let zero_mode_fit = slope_fit(&ts, &zs);
    let initial_low = run.low_sup[0].max(f64::MIN_POSITIVE);
    let max_low = run.low_sup.iter().cloned().fold(0.0, f64::max);
    ToySummary {
        zero_mode_fit,
        low_band_growth_factor: max_low / initial_low,
        config: cfg,
    }
}

pub fn run(common: &CommonArgs, flags: &ToySchrodingerConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let series = run_series(&cfg)?;
    let summary = summarize(&series, &cfg);

    let mut em = emitter_for(common, "toy-schrodinger")?;
    em.write_csv("series.csv", &series.header, &series.rows)?;
    em.write_json("summary.json", &summary)?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("toy-schrodinger", &cfg)?;
    golden_check(common, &out_dir)
}
