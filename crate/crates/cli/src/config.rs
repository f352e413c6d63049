//! Shared configuration plumbing: the constants block, TOML config-file
//! overlay, and flag-value parsers.
//!
//! Resolution order: clap flag defaults → explicit flags → `--config`
//! TOML file (highest precedence; partial files override only the keys
//! they name). The fully resolved config is echoed into every report and
//! the manifest. Unknown keys in a config file are a validation error.

use std::path::Path;

use capwave_core::dno::DnoBackend;
use capwave_core::error::{CoreError, Result};
use capwave_core::evolution::Integrator;
use capwave_core::Sign;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Desk-scale surrogates for the global constants block; echoed with
/// every run so artifacts self-describe the constants they assumed.
#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ConstantsBlock {
    /// Low-frequency weight exponent α.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Localization width δ.
    #[arg(long, default_value_t = 1e-9)]
    pub delta: f64,
    /// Companion width δ̃ = 400·δ.
    #[arg(long, default_value_t = 4e-7)]
    pub delta_tilde: f64,
    /// Desk-scale Sobolev index N₀ of the symmetrized-energy weight.
    #[arg(long, default_value_t = capwave_core::paralin::N0_DESK_DEFAULT)]
    pub n0_desk: usize,
}

impl Default for ConstantsBlock {
    fn default() -> Self {
        ConstantsBlock {
            alpha: 0.1,
            delta: 1e-9,
            delta_tilde: 4e-7,
            n0_desk: capwave_core::paralin::N0_DESK_DEFAULT,
        }
    }
}

fn validation<E: std::fmt::Display>(context: &str, e: E) -> CoreError {
    CoreError::Validation(format!("{context}: {e}"))
}

/// Overlays a TOML config file onto the flag-resolved config. Tables merge
/// recursively; scalars from the file replace flag values; unknown keys
/// are rejected with their path.
pub fn apply_config_file<T>(base: &T, path: &Path) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::Io(format!("{}: {e}", path.display())))?;
    let file: toml::Value =
        toml::from_str(&text).map_err(|e| validation(&path.display().to_string(), e))?;
    let mut merged = toml::Value::try_from(base)
        .map_err(|e| CoreError::Io(format!("serializing config defaults: {e}")))?;
    merge_toml(&mut merged, file);
    merged
        .try_into()
        .map_err(|e| validation(&path.display().to_string(), e))
}

fn merge_toml(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        // Keep the unknown key: deserialization rejects it
                        // with a field-path message.
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses a backend name plus fixed-point parameters.
pub fn parse_backend(name: &str, tol: f64, max_iter: usize) -> Result<DnoBackend> {
    let backend = match name {
        "taylor1" => DnoBackend::Taylor1,
        "taylor2" => DnoBackend::Taylor2,
        "taylor3" => DnoBackend::Taylor3,
        "fixed-point" => DnoBackend::FixedPoint { tol, max_iter },
        other => {
            return Err(CoreError::Validation(format!(
                "backend: unknown value {other:?} (expected taylor1 | taylor2 | taylor3 | fixed-point)"
            )))
        }
    };
    backend.validate()?;
    Ok(backend)
}

pub fn parse_integrator(name: &str) -> Result<Integrator> {
    match name {
        "rk4" => Ok(Integrator::Rk4),
        "integrating-factor" => Ok(Integrator::IntegratingFactor),
        other => Err(CoreError::Validation(format!(
            "integrator: unknown value {other:?} (expected rk4 | integrating-factor)"
        ))),
    }
}

/// Parses a sign string like `"+-"` into the matching sign list.
pub fn parse_signs(s: &str) -> Result<Vec<Sign>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(Sign::Plus),
            '-' => Ok(Sign::Minus),
            other => Err(CoreError::Validation(format!(
                "signs: unknown character {other:?} (expected + or -)"
            ))),
        })
        .collect()
}

/// Parses `"x,y"` into a frequency vector.
pub fn parse_vec2(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CoreError::Validation(format!(
            "frequency {s:?}: expected two comma-separated components"
        )));
    }
    let x = parts[0].parse().map_err(|e| validation(s, e))?;
    let y = parts[1].parse().map_err(|e| validation(s, e))?;
    Ok([x, y])
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(CoreError::Validation(format!(
            "sweep: need 0 < lo < hi and at least 2 points, got lo = {lo}, hi = {hi}, points = {points}"
        )));
    }
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    Ok((0..points).map(|i| lo * ratio.powi(i as i32)).collect())
}
