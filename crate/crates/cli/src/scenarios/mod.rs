//! One module per scenario kind; each resolves its config, executes the
//! pipeline, emits artifacts plus the manifest, and optionally compares
//! against a golden directory.

pub mod decay_probe;
pub mod dno_convergence;
pub mod evolve;
pub mod norm_monitor;
pub mod resonance_map;
pub mod symbol_audit;
pub mod toy_schrodinger;

use std::path::{Path, PathBuf};

use capwave_core::error::Result;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::artifact::{compare_with_golden, Emitter};
use crate::config::apply_config_file;

/// Flags shared by every subcommand; not part of the hashed science
/// config.
#[derive(clap::Args, Clone, Debug)]
pub struct CommonArgs {
    /// TOML config file; keys it names override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (relative paths resolve against CAPWAVE_OUT_ROOT;
    /// default `out/<scenario>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Golden directory: after the run, artifacts are compared against it.
    #[arg(long)]
    pub golden: Option<PathBuf>,
    /// Relative tolerance for numeric tokens in golden comparison
    /// (0 demands identical float text).
    #[arg(long, default_value_t = 0.0)]
    pub golden_rel_tol: f64,
}

/// Applies the optional config file on top of the flag-resolved config.
pub fn resolve_config<T>(common: &CommonArgs, flags: &T) -> Result<T>
where
    T: Serialize + DeserializeOwned + Clone,
{
    match &common.config {
        Some(path) => apply_config_file(flags, path),
        None => Ok(flags.clone()),
    }
}

/// Creates the emitter for a scenario, honoring `--out`.
pub fn emitter_for(common: &CommonArgs, scenario: &str) -> Result<Emitter> {
    let default = Path::new("out").join(scenario);
    let out = common.out.clone().unwrap_or(default);
    Emitter::new(&out)
}

/// Runs the golden comparison when requested.
pub fn golden_check(common: &CommonArgs, out_dir: &Path) -> Result<()> {
    match &common.golden {
        Some(golden) => compare_with_golden(out_dir, golden, common.golden_rel_tol),
        None => Ok(()),
    }
}
