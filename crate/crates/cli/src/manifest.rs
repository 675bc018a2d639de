//! Run manifest and atomic artifact writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub phases: BTreeMap<String, PhaseRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub config_fingerprint: String,
    pub wall_secs: f64,
    /// Paths relative to the output directory where possible, with SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Phase-specific facts such as truncated heads.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, serde_json::Value>,
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Digests of `files`, keyed by their path relative to `root` when inside it.
pub fn digests(root: &Path, files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for f in files {
        let key = f.strip_prefix(root).unwrap_or(f).to_string_lossy().into_owned();
        out.insert(key, digest_file(f)?);
    }
    Ok(out)
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                phases: BTreeMap::new(),
            });
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Records `phase` and rewrites the manifest atomically.
    pub fn record(dir: &Path, phase: &str, rec: PhaseRecord) -> Result<()> {
        let mut m = Self::read(dir)?;
        m.version = env!("CARGO_PKG_VERSION").to_string();
        m.phases.insert(phase.to_string(), rec);
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }
}
