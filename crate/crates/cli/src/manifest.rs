use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "suhnpf-run-v1";

/// Record of one run. `hash` covers the format, command, case and
/// configuration; the output directory and timestamps are left out so that
/// identical runs share a hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub hash: String,
    pub command: String,
    pub case: String,
    pub n: usize,
    pub config: serde_json::Value,
    pub output_dir: String,
    pub started: String,
    pub finished: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    format: &'a str,
    command: &'a str,
    case: &'a str,
    n: usize,
    config: &'a serde_json::Value,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        case: &str,
        n: usize,
        config: &C,
        out: &Path,
    ) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let hashed = serde_json::to_vec(&Hashed {
            format: MANIFEST_FORMAT,
            command,
            case,
            n,
            config: &config,
        })?;
        let now = timestamp();
        Ok(Self {
            format: MANIFEST_FORMAT.to_string(),
            hash: hex::encode(Sha256::digest(&hashed)),
            command: command.to_string(),
            case: case.to_string(),
            n,
            config,
            output_dir: out.display().to_string(),
            started: now.clone(),
            finished: now,
        })
    }

    pub fn finish(&mut self) {
        self.finished = timestamp();
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
