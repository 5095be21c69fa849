//! Run manifests: every file the tool writes gets a sidecar manifest
//! recording the command, flags, seeds and input digests that produced it.
//!
//! The manifest digest covers only the deterministic fields, so re-running a
//! command reproduces both the output bytes and the digest; wall-clock time
//! and worker count are recorded for the log but excluded from the hash.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
struct ManifestCore {
    tool: String,
    version: String,
    command: String,
    args: BTreeMap<String, String>,
    input_digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    #[serde(flatten)]
    core: ManifestCore,
    pub manifest_digest: String,
    pub output_path: String,
    pub output_digest: String,
    pub wall_ms: u128,
    pub threads: usize,
}

pub struct ManifestBuilder {
    core: ManifestCore,
    started: std::time::Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            core: ManifestCore {
                tool: "qcts".to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                args: BTreeMap::new(),
                input_digests: BTreeMap::new(),
            },
            started: std::time::Instant::now(),
        }
    }

    pub fn arg(mut self, name: &str, value: impl ToString) -> Self {
        self.core.args.insert(name.to_string(), value.to_string());
        self
    }

    pub fn input(mut self, name: &str, digest: &str) -> Self {
        self.core
            .input_digests
            .insert(name.to_string(), digest.to_string());
        self
    }

    /// Digest of the deterministic manifest fields. The output path is not
    /// among them: it does not influence the produced bytes, and re-running
    /// the same command to another path must embed the same digest.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(&self.core).expect("manifest serializes");
        qcts::digest::short_hex(json.as_bytes())
    }

    pub fn finish(self, output_path: &Path, output: &[u8], threads: usize) -> RunManifest {
        let manifest_digest = self.digest();
        RunManifest {
            manifest_digest,
            output_path: output_path.display().to_string(),
            output_digest: qcts::digest::short_hex(output),
            wall_ms: self.started.elapsed().as_millis(),
            threads,
            core: self.core,
        }
    }
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        json
    }

    /// Sidecar path for an output file: `<output>.manifest.json`.
    pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
        let mut name = output
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}
