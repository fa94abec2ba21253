//! Output envelope shared by every artifact the CLI writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "gddp";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings that influence an artifact's content. Output paths are left out
/// so that the same run written to different places hashes identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub enumeration_cap: usize,
    pub probe_cap: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn new(seed: Option<u64>) -> Self {
        RunConfig {
            seed,
            enumeration_cap: gddp_core::limits::enumeration_cap(),
            probe_cap: gddp_core::limits::probe_cap(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config: RunConfig,
    /// SHA-256 of each input file's bytes, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
}

/// An input file: its bytes' hash and its parsed payload.
pub struct Input {
    pub sha256: String,
    pub value: Value,
}

pub fn read_input(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let mut value: Value =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {} as JSON", path.display()))?;
    // accept both enveloped artifacts and bare payloads
    if value.get("tool").is_some() {
        if let Some(p) = value.get_mut("payload") {
            value = p.take();
        }
    }
    Ok(Input { sha256, value })
}

pub fn read_payload<T: DeserializeOwned>(path: &Path, inputs: &mut BTreeMap<String, String>, role: &str) -> Result<T> {
    let input = read_input(path)?;
    inputs.insert(role.to_string(), input.sha256);
    serde_json::from_value(input.value).with_context(|| format!("{} is not a valid {role} file", path.display()))
}

pub fn write_artifact<T: Serialize>(
    out: &Path,
    kind: &str,
    config: &RunConfig,
    inputs: BTreeMap<String, String>,
    payload: T,
) -> Result<()> {
    let env = Envelope {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        kind: kind.to_string(),
        config: config.clone(),
        inputs,
        payload,
    };
    write_text(out, &gddp_core::io::to_json(&env)?)
}

/// Writes to a file, or to standard output for `-`.
pub fn write_text(out: &Path, text: &str) -> Result<()> {
    if out == Path::new("-") {
        std::io::stdout().lock().write_all(text.as_bytes())?;
        Ok(())
    } else {
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))
    }
}
