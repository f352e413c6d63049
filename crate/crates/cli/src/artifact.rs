//! Artifact emission: output directories, CSV/JSON writers with 17-digit
//! float serialization, the run manifest, and golden-file comparison.
//!
//! Determinism contract: for a fixed resolved config and thread count the
//! data artifacts (every CSV and JSON report) are byte-identical across
//! runs. The manifest records the wall time of the run and is therefore
//! excluded from the byte-identity guarantee; its `config_sha256` field is
//! deterministic and identifies the run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use capwave_core::error::{CoreError, Result};
use capwave_core::report::fmt_f64;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable overriding the root that relative output
/// directories are resolved against (the only environment configuration).
pub const OUT_ROOT_ENV: &str = "CAPWAVE_OUT_ROOT";

/// A CSV cell: floats are serialized with 17 significant digits, text and
/// integers verbatim.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

/// Run manifest written alongside every scenario's artifacts.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub scenario: &'a str,
    /// SHA-256 of the compact JSON serialization of the resolved config.
    pub config_sha256: String,
    pub core_version: &'a str,
    pub cli_version: &'a str,
    /// Worker threads used by the numerical kernels (always 1: the
    /// toolkit runs single-threaded for bitwise determinism).
    pub thread_count: usize,
    pub wall_time_seconds: f64,
    /// Artifact file names, sorted.
    pub artifacts: Vec<String>,
    /// The full resolved configuration the run executed.
    pub config: &'a C,
}

/// Collects artifacts for one scenario run and writes the manifest last.
pub struct Emitter {
    out_dir: PathBuf,
    artifacts: Vec<String>,
    start: Instant,
}

fn io_err<E: std::fmt::Display>(path: &Path, e: E) -> CoreError {
    CoreError::Io(format!("{}: {e}", path.display()))
}

/// Resolves an output directory against `CAPWAVE_OUT_ROOT` when relative.
pub fn resolve_out_dir(out: &Path) -> PathBuf {
    if out.is_absolute() {
        return out.to_path_buf();
    }
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(out),
        None => out.to_path_buf(),
    }
}

impl Emitter {
    pub fn new(out: &Path) -> Result<Self> {
        let out_dir = resolve_out_dir(out);
        fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
        Ok(Emitter {
            out_dir,
            artifacts: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let path = self.out_dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            let rec: Vec<String> = row.iter().map(Cell::render).collect();
            w.write_record(&rec).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.out_dir.join(name);
        let text = capwave_core::report::to_json_pretty(value)?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` and returns the config hash.
    pub fn finish<C: Serialize>(mut self, scenario: &str, config: &C) -> Result<String> {
        let compact = serde_json::to_string(config)?;
        let hash = format!("{:x}", Sha256::digest(compact.as_bytes()));
        self.artifacts.sort();
        let manifest = Manifest {
            scenario,
            config_sha256: hash.clone(),
            core_version: env!("CARGO_PKG_VERSION"),
            cli_version: env!("CARGO_PKG_VERSION"),
            thread_count: 1,
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            artifacts: self.artifacts.clone(),
            config,
        };
        let path = self.out_dir.join("manifest.json");
        let text = capwave_core::report::to_json_pretty(&manifest)?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(hash)
    }
}

/// Golden-file comparison: every golden artifact except `manifest.json`
/// must exist in `out_dir` and match token-by-token; numeric tokens are
/// compared with the given relative tolerance (0 demands byte-identical
/// float text), all other tokens exactly.
pub fn compare_with_golden(out_dir: &Path, golden: &Path, rel_tol: f64) -> Result<()> {
    let mut names: Vec<PathBuf> = fs::read_dir(golden)
        .map_err(|e| io_err(golden, e))?
        .filter_map(|r| r.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CoreError::Validation(format!(
            "golden directory {} holds no comparable artifacts",
            golden.display()
        )));
    }
    for gpath in names {
        let name = gpath.file_name().unwrap().to_string_lossy().to_string();
        let opath = out_dir.join(&name);
        let want = fs::read_to_string(&gpath).map_err(|e| io_err(&gpath, e))?;
        let got = fs::read_to_string(&opath).map_err(|e| io_err(&opath, e))?;
        compare_tokens(&name, &want, &got, rel_tol)?;
    }
    Ok(())
}

fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| c.is_whitespace() || ",:\"{}[]".contains(c))
        .filter(|t| !t.is_empty())
        .collect()
}

fn compare_tokens(name: &str, want: &str, got: &str, rel_tol: f64) -> Result<()> {
    let wt = tokens(want);
    let gt = tokens(got);
    if wt.len() != gt.len() {
        return Err(CoreError::Validation(format!(
            "golden mismatch in {name}: token count {} vs {}",
            wt.len(),
            gt.len()
        )));
    }
    for (i, (w, g)) in wt.iter().zip(&gt).enumerate() {
        if w == g {
            continue;
        }
        match (w.parse::<f64>(), g.parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                let denom = a.abs().max(b.abs());
                if denom > 0.0 && (a - b).abs() / denom > rel_tol {
                    return Err(CoreError::Validation(format!(
                        "golden mismatch in {name} at token {i}: {w} vs {g} \
                         (relative deviation {:.3e} > {rel_tol:.3e})",
                        (a - b).abs() / denom
                    )));
                }
            }
            _ => {
                return Err(CoreError::Validation(format!(
                    "golden mismatch in {name} at token {i}: {w:?} vs {g:?}"
                )));
            }
        }
    }
    Ok(())
}
