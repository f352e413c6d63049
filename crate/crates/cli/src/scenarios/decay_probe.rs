//! Linear dispersive decay probe: propagates one dyadic band of a
//! Gaussian profile and records sup norms over a time ladder. Emits
//! `decay.csv` (columns t, sup_norm, band, theta), `summary.json`, and the
//! manifest.

use capwave_core::dispersion::decay_probe;
use capwave_core::error::Result;
use capwave_core::spectral::{DyadicCutoffs, Grid2D, SpectralField};
use serde::{Deserialize, Serialize};

use crate::artifact::Cell;
use crate::config::{geometric, ConstantsBlock};
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct DecayProbeConfig {
    /// Grid points per axis (power of two). The box must outrun the band's
    /// group velocity over the probed times, hence the large defaults.
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 200.0 * std::f64::consts::PI)]
    pub box_len: f64,
    /// Dyadic band k of the projection P_k.
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    pub band: i32,
    /// θ of the predicted low-band rate (metadata; 1 for the high-band rate).
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Gaussian width of the probe profile.
    #[arg(long, default_value_t = 1.45)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 12)]
    pub points: usize,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

/// The probe profile: a Gaussian built spectrally (discrete delta, then the
/// exact radial multiplier e^{−σ²|ξ|²/2}) so it stays a true Gaussian even
/// when σ is below the grid spacing of a large probe box.
pub fn probe_profile(grid: Grid2D, sigma: f64) -> Result<SpectralField> {
    let dx = grid.box_length() / grid.n() as f64;
    let delta = SpectralField::from_physical_fn(grid, move |x, y| {
        if x < 0.5 * dx && y < 0.5 * dx {
            1.0
        } else {
            0.0
        }
    });
    let s2 = 0.5 * sigma * sigma;
    delta.apply_radial_multiplier(|r| (-s2 * r * r).exp(), 1.0)
}

/// Shared probe driver (also used by the acceptance suite).
pub fn run_probe(cfg: &DecayProbeConfig) -> Result<capwave_core::dispersion::DecayProbe> {
    let grid = Grid2D::new(cfg.n, cfg.box_len)?;
    let f = probe_profile(grid, cfg.sigma)?;
    // The range is anchored on the probed band so `band` is a genuine
    // (non-closing) band even when it sits at the grid's spectral edge.
    let cutoffs = DyadicCutoffs::from_range(cfg.band - 4, cfg.band + 2);
    let times = geometric(cfg.t_min, cfg.t_max, cfg.points)?;
    decay_probe(&f, &cutoffs, cfg.band, &times, cfg.theta)
}

pub fn run(common: &CommonArgs, flags: &DecayProbeConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let probe = run_probe(&cfg)?;

    let rows: Vec<Vec<Cell>> = probe
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::F(r.t),
                Cell::F(r.sup_norm),
                Cell::I(probe.band as i64),
                Cell::F(probe.theta),
            ]
        })
        .collect();

    #[derive(Serialize)]
    struct Summary<'a> {
        probe: &'a capwave_core::dispersion::DecayProbe,
        config: &'a DecayProbeConfig,
    }

    let mut em = emitter_for(common, "decay-probe")?;
    em.write_csv("decay.csv", &["t", "sup_norm", "band", "theta"], &rows)?;
    em.write_json(
        "summary.json",
        &Summary {
            probe: &probe,
            config: &cfg,
        },
    )?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("decay-probe", &cfg)?;
    golden_check(common, &out_dir)
}
