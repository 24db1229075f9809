//! Atomic file writes and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| CliError::input(path.display(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::input(path.display(), e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read_input(path)?).map_err(|e| CliError::input(path.display(), e))
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Provenance of one command invocation. Everything outside `timing` is
/// a function of the arguments and inputs.
pub struct Manifest {
    command: String,
    args: Vec<String>,
    parameters: Map<String, Value>,
    seeds: Vec<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    timing: Map<String, Value>,
    started: SystemTime,
    clock: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            parameters: Map::new(),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timing: Map::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.into(), serde_json::to_value(value).expect("serializable parameter"));
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn timing(&mut self, key: &str, value: impl Serialize) {
        self.timing
            .insert(key.into(), serde_json::to_value(value).expect("serializable timing"));
    }

    /// Writes `bytes` atomically and records the digest under `label`.
    pub fn write_output(&mut self, path: &Path, label: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(path, bytes)?;
        self.outputs.push(FileDigest {
            path: label.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn finish(mut self, path: &Path) -> Result<(), CliError> {
        let started = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        self.timing.insert("started_unix_s".into(), json!(started));
        self.timing
            .insert("wall_us".into(), json!(self.clock.elapsed().as_secs_f64() * 1e6));
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "args": self.args,
            "parameters": self.parameters,
            "rng_algorithm": spinglass::RNG_ALGORITHM,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timing": self.timing,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// `<file>.manifest.json` next to a single-file output.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(dir.display(), e))
}
