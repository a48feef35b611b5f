//! Run settings: defaults, an optional JSON config file, then flags.
//!
//! The config file is a flat JSON object. Every field is optional:
//!
//! ```json
//! {
//!   "exponent": "vg",
//!   "dim": 3,
//!   "grid": "1e-4:0.1:13",
//!   "seed": 7,
//!   "paths": 100000,
//!   "workers": 4,
//!   "tolerance": 1e-8,
//!   "out_dir": "runs/vg"
//! }
//! ```
//!
//! Unknown fields are rejected so that typos do not silently fall back to
//! defaults. Precedence is flag, then file, then `SBMKIT_OUT_DIR` (output
//! directory only), then the built-in default.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use sbmkit::grid::GridSpec;
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SBMKIT_OUT_DIR";

pub const DEFAULT_EXPONENT: &str = "vg";
pub const DEFAULT_DIM: usize = 3;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PATHS: u64 = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_OUT_DIR: &str = "sbmkit-out";

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    s.parse().map_err(|e: sbmkit::Error| e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Catalog key, e.g. `vg` or `geo-iter(2,2)`.
    #[arg(long, global = true)]
    pub exponent: Option<String>,
    /// Spatial dimension.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Logarithmic grid `LO:HI:N`.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<GridSpec>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long, global = true)]
    pub paths: Option<u64>,
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Output directory [default: $SBMKIT_OUT_DIR, else `sbmkit-out`].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Contents of a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub exponent: Option<String>,
    pub dim: Option<usize>,
    pub grid: Option<String>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub workers: Option<usize>,
    pub tolerance: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings; this is the snapshot stored in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub exponent: String,
    pub dim: usize,
    /// `None` means each command uses its own default grid.
    pub grid: Option<GridSpec>,
    pub seed: u64,
    pub paths: u64,
    pub workers: Option<usize>,
    pub tolerance: f64,
    pub out_dir: PathBuf,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let file_grid = match &file.grid {
            Some(g) => Some(parse_grid(g).map_err(anyhow::Error::msg).context("config field `grid`")?),
            None => None,
        };
        let out_dir = args
            .out_dir
            .clone()
            .or(file.out_dir)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let settings = Self {
            exponent: args.exponent.clone().or(file.exponent).unwrap_or_else(|| DEFAULT_EXPONENT.into()),
            dim: args.dim.or(file.dim).unwrap_or(DEFAULT_DIM),
            grid: args.grid.or(file_grid),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            paths: args.paths.or(file.paths).unwrap_or(DEFAULT_PATHS),
            workers: args.workers.or(file.workers),
            tolerance: args.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            out_dir,
        };
        if settings.dim == 0 {
            anyhow::bail!("--dim must be at least 1");
        }
        if settings.paths == 0 {
            anyhow::bail!("--paths must be positive");
        }
        if settings.workers == Some(0) {
            anyhow::bail!("--workers must be positive");
        }
        if !(settings.tolerance > 0.0) {
            anyhow::bail!("--tolerance must be positive");
        }
        Ok(settings)
    }

    /// The grid points, or `default` when no grid was given.
    pub fn grid_or(&self, default: GridSpec) -> Vec<f64> {
        self.grid.unwrap_or(default).points()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"exponent":"stable(1)","dim":2,"seed":9,"grid":"1e-3:1:4"}"#).unwrap();
        let args = CommonArgs { config: Some(path), dim: Some(3), out_dir: Some("x".into()), ..Default::default() };
        let s = Settings::resolve(&args).unwrap();
        assert_eq!(s.exponent, "stable(1)");
        assert_eq!(s.dim, 3);
        assert_eq!(s.seed, 9);
        assert_eq!(s.grid, Some(GridSpec { lo: 1e-3, hi: 1.0, n: 4 }));
        assert_eq!(s.paths, DEFAULT_PATHS);
    }

    #[test]
    fn unknown_field_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dimension":2}"#).unwrap();
        let args = CommonArgs { config: Some(path), ..Default::default() };
        assert!(Settings::resolve(&args).is_err());
    }
}
