//! Normal-form symbol audit: per-band support/phase constants and
//! refinement-stability of the structured size sweep. Emits `audit.json`
//! and the manifest.

use capwave_core::error::Result;
use capwave_core::normal_form::{
    build_normal_form_symbol, size_constant, verify_support, CubicSource, QuarticSource,
    SupportReport,
};
use serde::{Deserialize, Serialize};

use crate::config::{parse_signs, ConstantsBlock};
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct SymbolAuditConfig {
    /// Correction-symbol order: 2 (quadratic) or 3 (cubic, bulk source).
    #[arg(long, default_value_t = 2)]
    pub order: u8,
    /// Sign signature, one character per slot, e.g. "+-".
    #[arg(long, default_value = "+-")]
    pub signs: String,
    /// Random support samples per band.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Dyadic band range of the first input slot.
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    pub k_min: i32,
    #[arg(long, default_value_t = 6, allow_hyphen_values = true)]
    pub k_max: i32,
    /// Structured size-sweep resolution; the audit also runs the doubled
    /// resolution and records the relative change (order 2 only).
    #[arg(long, default_value_t = 16)]
    pub resolution: usize,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

#[derive(Serialize)]
struct BandAudit {
    k1: i32,
    support: SupportReport,
    /// Structured `sup|symbol|/2^{k₁,+}` sweep at `resolution`, its doubled
    /// refinement, and the relative change between them (order 2 only).
    size_sweep: Option<f64>,
    size_sweep_refined: Option<f64>,
    size_rel_change: Option<f64>,
}

#[derive(Serialize)]
struct AuditReport<'a> {
    bands: Vec<BandAudit>,
    config: &'a SymbolAuditConfig,
}

pub fn run(common: &CommonArgs, flags: &SymbolAuditConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let signs = parse_signs(&cfg.signs)?;
    let cubic = if cfg.order == 3 {
        CubicSource::BulkApprox
    } else {
        CubicSource::None
    };
    let sym = build_normal_form_symbol(cfg.order, &signs, cubic, QuarticSource::None)?;

    let mut bands = Vec::new();
    for k1 in cfg.k_min..=cfg.k_max {
        let support = verify_support(&sym, k1, cfg.samples, cfg.seed)?;
        let (size_sweep, size_sweep_refined, size_rel_change) = if cfg.order == 2 {
            let s1 = size_constant(&sym, k1, cfg.resolution)?;
            let s2 = size_constant(&sym, k1, 2 * cfg.resolution)?;
            let rel = (s2 - s1).abs() / s2.max(f64::MIN_POSITIVE);
            (Some(s1), Some(s2), Some(rel))
        } else {
            (None, None, None)
        };
        bands.push(BandAudit {
            k1,
            support,
            size_sweep,
            size_sweep_refined,
            size_rel_change,
        });
    }

    let report = AuditReport {
        bands,
        config: &cfg,
    };
    let mut em = emitter_for(common, "symbol-audit")?;
    em.write_json("audit.json", &report)?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("symbol-audit", &cfg)?;
    golden_check(common, &out_dir)
}
