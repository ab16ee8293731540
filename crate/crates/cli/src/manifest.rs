//! Run manifests: resolved config, results and a hashed file inventory.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ocl_core::compat::CompatibilityReport;
use ocl_core::solver::RunStats;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::RunChecks;
use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Subcommand that produced the directory.
    pub command: String,
    pub version: String,
    /// Seconds since the Unix epoch; absent in seedless runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<u64>,
    pub config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<RunChecks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compat: Option<CompatibilityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub picard: Vec<PicardRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRecordSummary>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsRecord {
    pub steps: usize,
    pub rejected_steps: usize,
    pub boundary_leak: f64,
    pub clamped_cells: usize,
    pub max_dt_lambda: f64,
}

impl From<RunStats> for StatsRecord {
    fn from(s: RunStats) -> Self {
        Self {
            steps: s.steps,
            rejected_steps: s.rejected_steps,
            boundary_leak: s.boundary_leak,
            clamped_cells: s.clamped_cells,
            max_dt_lambda: s.max_dt_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardRecord {
    pub n: f64,
    pub t0: f64,
    pub k_hat: f64,
    pub iterate_distances: Vec<f64>,
    pub contracting: bool,
    pub geometric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRecordSummary {
    pub points: usize,
    pub failed: Vec<String>,
    /// Empirical log-log slope of `max_phi` against `n` on the finest grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_rate: Option<f64>,
    pub cauchy_warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn hash_file(dir: &Path, rel: &str) -> Result<FileEntry> {
    let data = std::fs::read(dir.join(rel)).with_context(|| format!("reading {rel}"))?;
    Ok(FileEntry {
        path: rel.to_string(),
        bytes: data.len() as u64,
        sha256: hex::encode(Sha256::digest(&data)),
    })
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).context("serializing manifest")?;
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fails on the first listed file that is missing or whose content
    /// changed.
    pub fn check_files(&self, dir: &Path) -> Result<()> {
        for entry in &self.files {
            let now = hash_file(dir, &entry.path)?;
            if &now != entry {
                bail!(
                    "{} does not match the manifest (sha256 {} vs recorded {})",
                    entry.path,
                    now.sha256,
                    entry.sha256
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), b"abc").unwrap();
        let e = hash_file(dir.path(), "a.txt").unwrap();
        assert_eq!(
            e.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(e.bytes, 3);
    }
}
