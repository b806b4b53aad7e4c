//! Configuration resolution (flags win over the optional JSON config file),
//! report envelopes, and atomic output writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use bifbm::ModelParams;
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BIFBM_OUT_DIR";

pub const SCHEMA_VERSION: u32 = 1;

/// Optional JSON config file mirroring the command-line flags. Any flag
/// given on the command line overrides the file value.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub h: Option<f64>,
    pub k: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub kernel: Option<String>,
    pub hurst: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<String>,
    pub paths: Option<usize>,
    pub with_origin: Option<bool>,
    pub quad_nodes: Option<usize>,
    pub target: Option<String>,
    pub sweep: Option<String>,
    pub n: Option<f64>,
    pub a: Option<u64>,
    pub slope_tol: Option<f64>,
    pub ratio_tol: Option<f64>,
    pub h_sweep: Option<String>,
    pub prop: Option<u32>,
    pub n_list: Option<String>,
    pub t_grid: Option<String>,
    pub k_max: Option<usize>,
    pub f_hermite: Option<String>,
    pub f_poly: Option<String>,
    pub rel_tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("cannot read config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("cannot parse config file {}", p.display()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Parses "a:b" as the integer range a..=b and "x,y,z" as an explicit list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = text.split_once(':') {
        let lo: u64 = lo.trim().parse().context("grid range start")?;
        let hi: u64 = hi.trim().parse().context("grid range end")?;
        if lo == 0 || hi < lo {
            bail!("grid range must satisfy 1 <= start <= end, got {text}");
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("grid value {v:?}")))
        .collect()
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("list value {v:?}")))
        .collect()
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("list value {v:?}")))
        .collect()
}

/// Parses "1:1,2:0.5" into Hermite (order, coefficient) pairs.
pub fn parse_hermite_terms(text: &str) -> Result<Vec<(usize, f64)>> {
    text.split(',')
        .map(|term| {
            let (k, c) = term
                .split_once(':')
                .with_context(|| format!("expected order:coefficient, got {term:?}"))?;
            Ok((
                k.trim().parse::<usize>().context("Hermite order")?,
                c.trim().parse::<f64>().context("Hermite coefficient")?,
            ))
        })
        .collect()
}

pub fn model_params(h: f64, k: f64) -> Result<ModelParams> {
    ModelParams::new(h, k).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Report wrapper shared by every command. Fields that differ between
/// otherwise identical runs are confined to `timing`.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub pass: bool,
    pub timing: String,
    pub report: T,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        seed: u64,
        pass: bool,
        wall_ms: f64,
        report: T,
    ) -> Self {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        Envelope {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo {
                name: "bifbm",
                version: env!("CARGO_PKG_VERSION"),
            },
            command: command.to_string(),
            config,
            seed,
            pass,
            timing: format!("created_unix_ms={created} wall_ms={wall_ms:.1}"),
            report,
        }
    }
}

/// Default output path: $BIFBM_OUT_DIR (or ".") / <name>.
pub fn default_out(name: &str) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(name)
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create output directory {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move report into {}", path.display()))?;
    Ok(())
}

pub fn write_json_report<T: Serialize>(path: &Path, envelope: &Envelope<T>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(envelope)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
