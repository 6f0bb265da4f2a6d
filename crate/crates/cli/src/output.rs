//! Output directories, atomic file writes and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Simulated-time stamps of a labeled trace (never wall-clock time, so
/// manifests stay reproducible).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTimestamps {
    pub t_a_ms: Option<u64>,
    pub t_b_ms: Option<u64>,
    pub attack_end_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub artifact_version: String,
    /// SHA-256 of the resolved config with the scenario seed removed.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub config: Value,
    /// Command options that are not config keys (input paths, flags).
    pub options: Value,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub timestamps: TraceTimestamps,
}

pub fn config_hash(config: &Value) -> String {
    let mut c = config.clone();
    if let Some(s) = c.get_mut("scenario").and_then(Value::as_object_mut) {
        s.remove("rng_seed");
    }
    sha256_hex(c.to_string().as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Writes files atomically (temp file + rename) and remembers their hashes.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Internal(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_owned(),
            written: Vec::new(),
        })
    }

    fn persist(&self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.root.join(rel);
        let dir = target.parent().unwrap_or(&self.root);
        let internal =
            |e: &dyn std::fmt::Display| CliError::Internal(format!("{}: {e}", target.display()));
        std::fs::create_dir_all(dir).map_err(|e| internal(&e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| internal(&e))?;
        tmp.write_all(bytes).map_err(|e| internal(&e))?;
        tmp.as_file().sync_all().map_err(|e| internal(&e))?;
        tmp.persist(&target).map_err(|e| internal(&e))?;
        Ok(())
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.persist(rel, bytes)?;
        self.written.push(FileDigest {
            path: rel.to_owned(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest, CliError> {
        manifest.outputs = self.written.clone();
        let mut bytes =
            serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.persist(MANIFEST_FILE, &bytes)?;
        Ok(manifest)
    }
}
