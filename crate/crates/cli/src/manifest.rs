//! `run_manifest.json`: what was run and a content hash for every output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evoipd_core::bank::sha256_hex;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const RUN_MANIFEST: &str = "run_manifest.json";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub bank_set: String,
    pub faithful: bool,
    pub cooperation: [[Option<f64>; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
    #[serde(default)]
    pub audits: Vec<AuditRecord>,
    /// Relative path to sha256 for every file in the output directory.
    pub files: BTreeMap<String, String>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunManifest {
            engine_version: ENGINE_VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config_hash: sha256_hex(config.canonical_json().as_bytes()),
            config: config.clone(),
            stages: Vec::new(),
            audits: Vec::new(),
            files: BTreeMap::new(),
            complete: false,
            error: None,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn stage(&mut self, name: &str, status: &str, detail: Option<String>) {
        self.stages.push(StageRecord { name: name.into(), status: status.into(), detail });
    }

    /// Rehashes the output directory and writes the manifest into it.
    pub fn write(&mut self, out: &Path) -> Result<(), CliError> {
        self.files = hash_tree(out)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        let path = out.join(RUN_MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

pub fn hash_tree(root: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut files = Vec::new();
    collect(root, &mut files).map_err(|e| CliError::io(root, e))?;
    let mut map = BTreeMap::new();
    for f in files {
        let rel = f.strip_prefix(root).expect("walked under root").to_string_lossy().replace('\\', "/");
        if rel == RUN_MANIFEST {
            continue;
        }
        let bytes = fs::read(&f).map_err(|e| CliError::io(&f, e))?;
        map.insert(rel, sha256_hex(&bytes));
    }
    Ok(map)
}
