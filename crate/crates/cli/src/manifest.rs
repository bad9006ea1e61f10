use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub tool_version: String,
    /// SHA-256 of every input file, hex.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects inputs and outputs while a command runs.
pub struct Recorder {
    command: String,
    params: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl Recorder {
    pub fn new(command: &str, params: &impl Serialize, config: Option<&Path>) -> Result<Self, Failure> {
        let mut r = Self {
            command: command.into(),
            params: serde_json::to_value(params)?,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        };
        if let Some(c) = config {
            r.input(c)?;
        }
        Ok(r)
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        let h = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), h);
        Ok(())
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    /// Writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf, Failure> {
        let path = dir.join("manifest.json");
        self.outputs.push(path.clone());
        let m = RunManifest {
            command: self.command,
            params: self.params,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            input_hashes: self.inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(path)
    }
}
