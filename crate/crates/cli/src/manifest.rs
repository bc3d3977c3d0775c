//! Run directory bookkeeping: every command writes its outputs plus a
//! manifest (resolved arguments, config hash, seeds, tool version) so that a
//! run can be reproduced exactly. Nothing time-dependent goes in, so two runs
//! with the same manifest produce byte-identical trees. Partially written
//! outputs are removed when a command fails.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Collects files written by one command; deletes them unless committed.
pub struct RunDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Registers a file created by library code inside this run directory.
    pub fn adopt(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    /// Writes the manifest and marks the run as complete.
    pub fn commit<A: Serialize>(&mut self, command: &str, args: &A, seeds: &[(&str, u64)]) -> Result<()> {
        let args_value = serde_json::to_value(args)?;
        let config_hash = hash_value(&args_value)?;
        let outputs: Vec<String> = self
            .written
            .iter()
            .filter_map(|p| p.strip_prefix(&self.dir).ok())
            .map(|p| p.to_string_lossy().into_owned())
            .collect();
        let manifest = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "args": args_value,
            "config_hash": config_hash,
            "seeds": seeds.iter().map(|(k, v)| (k.to_string(), *v)).collect::<std::collections::BTreeMap<_, _>>(),
            "outputs": outputs,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.written {
                let _ = std::fs::remove_file(path);
            }
        }
    }
}

fn hash_value(value: &serde_json::Value) -> Result<String> {
    let canonical = serde_json::to_vec(value)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(format!("{:x}", hasher.finalize()))
}
