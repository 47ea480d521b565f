//! The run manifest every command emits on success.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

/// A machine-readable record of one command invocation: what ran, on which
/// files, with which seed, and what came out. Emitted as a single JSON line
/// on stderr so data outputs stay byte-identical across reruns (the wall
/// time would otherwise break that).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub schema_version: u32,
    pub library_version: &'static str,
    /// Command-specific counters (examples in/out, parse failures, …).
    pub counts: BTreeMap<&'static str, u64>,
    pub wall_ms: u64,
}

impl RunManifest {
    pub fn new(command: &'static str) -> RunManifest {
        RunManifest {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            schema_version: breakage_core::features::SCHEMA_VERSION,
            library_version: breakage_core::VERSION,
            counts: BTreeMap::new(),
            wall_ms: 0,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn count(mut self, key: &'static str, value: u64) -> Self {
        self.counts.insert(key, value);
        self
    }

    pub fn emit(mut self, started: std::time::Instant) {
        self.wall_ms = started.elapsed().as_millis() as u64;
        // Serialization of this struct cannot fail.
        eprintln!("{}", serde_json::to_string(&self).expect("manifest is serializable"));
    }
}
