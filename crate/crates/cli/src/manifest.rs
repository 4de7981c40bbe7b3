//! Run manifest written next to every output set.

use std::path::Path;

use anyhow::Context;
use isac_hybrid::io::{atomic_write, Scenario};
use serde::{Deserialize, Serialize};

use crate::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Subcommand name, e.g. `peb-point`.
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Fully resolved scenario, defaults included.
    pub scenario: Scenario,
    /// Subcommand arguments as parsed.
    pub args: Command,
    /// Output files, relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        manifest.scenario.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        atomic_write(&dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(())
    }
}
