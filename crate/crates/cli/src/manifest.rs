//! Run manifest: the machine-readable record tying every output file to the
//! exact configuration, code version, and seeds that produced it.

use crate::error::{CliError, CliResult};
use econokin_core::rng::substream_seed;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Replica `i` of a run with base seed `s` uses the stream seed
/// `substream_seed(s, i)`; the mix function is documented bit-exactly in the
/// core RNG module so other implementations can reproduce the streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub mode: String,
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub base_seed: u64,
    /// Seeds actually consumed, in replica order (empty for deterministic
    /// modes).
    pub replica_seeds: Vec<u64>,
    pub workers: usize,
    /// Convexity constant of the mode's transformed potential, when defined.
    #[serde(default)]
    pub rho_delta: Option<f64>,
    /// Output files, relative to the manifest's directory.
    pub files: Vec<String>,
    /// Mode-specific scalar results consumed by the `report` subcommand.
    pub summary: Map<String, Value>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(mode: &str, config_hash: &str, base_seed: u64, workers: usize) -> Self {
        Self {
            mode: mode.to_string(),
            config_hash: config_hash.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: now_unix(),
            finished_unix: 0,
            base_seed,
            replica_seeds: Vec::new(),
            workers,
            rho_delta: None,
            files: Vec::new(),
            summary: Map::new(),
        }
    }

    /// Records the seeds for `count` replicas derived from the base seed.
    pub fn derive_replica_seeds(&mut self, count: usize) {
        self.replica_seeds = (0..count)
            .map(|i| substream_seed(self.base_seed, i as u64))
            .collect();
    }

    pub fn push_file(&mut self, name: &str) {
        self.files.push(name.to_string());
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> CliResult<()> {
        let v = serde_json::to_value(value)
            .map_err(|e| CliError::Io(format!("serializing manifest field {key}: {e}")))?;
        self.summary.insert(key.to_string(), v);
        Ok(())
    }

    /// Stamps the end time and writes `manifest.json` into `out`.
    pub fn finish_and_write(&mut self, out: &Path) -> CliResult<()> {
        self.finished_unix = now_unix();
        self.push_file(MANIFEST_FILE);
        econokin_core::io::write_json(&out.join(MANIFEST_FILE), self)
            .map_err(|e| CliError::Io(format!("writing manifest: {e}")))?;
        Ok(())
    }
}

pub fn read(path: &Path) -> CliResult<RunManifest> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("reading manifest {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Io(format!("corrupt manifest {}: {e}", path.display())))
}
