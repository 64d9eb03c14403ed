//! Optional `key = value` configuration files. Flags override file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use cayley_gibbs::{ScanRange, SolverConfig};

use crate::error::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "k",
    "theta_lo",
    "theta_hi",
    "steps",
    "schemes",
    "jobs",
    "out",
    "sidecar",
    "grid_points",
    "bisect_tol",
    "residual_tol",
    "dedup_tol",
    "max_iter",
    "scan_margin",
    "scan_lo",
    "scan_hi",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!("config line {}: expected key = value, got {raw:?}", i + 1)));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::usage(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get_raw(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::usage(format!("config key {key}: cannot parse {v:?}"))))
            .transpose()
    }

    /// `flag`, else the file value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

/// Solver overrides shared by every subcommand that solves.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct SolverArgs {
    /// Grid points of the root-isolating scan.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub bisect_tol: Option<f64>,
    /// Residual above which a candidate solution is rejected.
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub dedup_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Margin added to the a priori root bound.
    #[arg(long)]
    pub scan_margin: Option<f64>,
    /// Fixed scan interval; needs both ends.
    #[arg(long, requires = "scan_hi")]
    pub scan_lo: Option<f64>,
    #[arg(long, requires = "scan_lo")]
    pub scan_hi: Option<f64>,
}

impl SolverArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default();
        if let Some(v) = file.pick(self.grid_points, "grid_points")? {
            cfg.grid_points = v;
        }
        if let Some(v) = file.pick(self.bisect_tol, "bisect_tol")? {
            cfg.bisect_tol = v;
        }
        if let Some(v) = file.pick(self.residual_tol, "residual_tol")? {
            cfg.residual_tol = v;
        }
        if let Some(v) = file.pick(self.dedup_tol, "dedup_tol")? {
            cfg.dedup_tol = v;
        }
        if let Some(v) = file.pick(self.max_iter, "max_iter")? {
            cfg.max_iter = v;
        }
        let lo = file.pick(self.scan_lo, "scan_lo")?;
        let hi = file.pick(self.scan_hi, "scan_hi")?;
        match (lo, hi) {
            (Some(lo), Some(hi)) => cfg.scan = ScanRange::Fixed { lo, hi },
            (None, None) => {
                if let Some(margin) = file.pick(self.scan_margin, "scan_margin")? {
                    cfg.scan = ScanRange::Auto { margin };
                }
            }
            _ => return Err(CliError::usage("scan_lo and scan_hi must be given together")),
        }
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }
}
