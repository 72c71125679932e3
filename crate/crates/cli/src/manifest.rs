//! Run manifests: every command records its resolved configuration, seed,
//! input digests, and output digests next to its outputs, so any run can be
//! re-executed bit-for-bit with `--from-manifest`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A manifest input no longer matches its recorded digest, so the run
/// cannot be reproduced bit-for-bit. Treated as a data error by the CLI.
#[derive(Debug)]
pub struct InputDriftError {
    pub path: String,
    pub expected: String,
    pub found: String,
}

impl std::fmt::Display for InputDriftError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "manifest input {} has changed since the recorded run \
             (expected sha256 {}, found {})",
            self.path, self.expected, self.found
        )
    }
}

impl std::error::Error for InputDriftError {}

/// A file path together with its content digest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Manifest written atomically alongside a command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand name.
    pub command: String,
    /// Crate version that produced the run.
    pub version: String,
    /// Start and end timestamps (UTC, RFC 3339).
    pub started_utc: String,
    pub finished_utc: String,
    /// Master seed of the run.
    pub seed: u64,
    /// Fully resolved command configuration.
    pub config: serde_json::Value,
    /// Input files and their digests at run time.
    pub inputs: Vec<FileDigest>,
    /// Output files and their digests after the run.
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("manifest {} is not valid JSON", path.display()))
    }

    /// Deserializes the embedded config into a command's config type.
    pub fn config_as<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.config.clone())
            .with_context(|| format!("manifest config does not match command '{}'", self.command))
    }

    /// Errors if any recorded input file is missing or has changed, which
    /// would void the bit-for-bit reproduction guarantee.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let current = sha256_file(Path::new(&input.path))
                .with_context(|| format!("manifest input {} is unreadable", input.path))?;
            if current != input.sha256 {
                return Err(InputDriftError {
                    path: input.path.clone(),
                    expected: input.sha256.clone(),
                    found: current,
                }
                .into());
            }
        }
        Ok(())
    }
}

/// Streaming SHA-256 of a file, hex encoded.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)
        .with_context(|| format!("cannot open {} for hashing", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Writes bytes atomically: a temp file in the target directory, synced,
/// then renamed over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    use std::io::Write;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot move manifest into place at {}", path.display()))?;
    Ok(())
}

/// Builder used by commands while they run.
pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: serde_json::Value,
    started_utc: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Result<Self> {
        Ok(ManifestBuilder {
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).context("cannot serialize config")?,
            started_utc: chrono::Utc::now().to_rfc3339(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Finalizes and writes `<command>_manifest.json` in `out_dir`.
    pub fn write(self, out_dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_utc: self.started_utc,
            finished_utc: chrono::Utc::now().to_rfc3339(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = out_dir.join(format!("{}_manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest).context("cannot serialize manifest")?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
