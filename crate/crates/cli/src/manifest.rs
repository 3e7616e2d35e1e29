//! Per-stage run manifests for exact reproduction: the config hash, seed
//! and crate version a stage ran with. Every data file also records the
//! hash on its first line, and `report` refuses to aggregate files whose
//! hashes disagree.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub manifest_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Manifest {
    pub fn new(stage: &str, manifest_hash: &str, seed: u64) -> Self {
        Self {
            stage: stage.to_string(),
            manifest_hash: manifest_hash.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        let path = out_dir.join(format!("{}_manifest.json", self.stage));
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn read(out_dir: &Path, stage: &str) -> anyhow::Result<Self> {
        let path = out_dir.join(format!("{}_manifest.json", stage));
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Extracts the `# manifest_hash=...` comment from a data file, if present.
pub fn file_hash(path: &Path) -> anyhow::Result<Option<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# manifest_hash="))
        .map(|h| h.trim().to_string()))
}
