//! Run manifests: every command records what it did next to its outputs.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub duration_secs: f64,
}

/// Collects run metadata and writes exactly one manifest at the end.
pub struct RunRecorder {
    manifest: RunManifest,
    started: Instant,
}

impl RunRecorder {
    pub fn new(command: &str) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                config: None,
                seed: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_secs: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, path: &Path) -> &mut Self {
        self.manifest.config = Some(path.display().to_string());
        self
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.manifest.seed = Some(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.display().to_string());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.manifest.outputs.push(path.display().to_string());
        self
    }

    /// Serializes the manifest next to the run's outputs (write-then-rename).
    pub fn write(mut self, path: &Path) -> CliResult<()> {
        self.manifest.duration_secs = self.started.elapsed().as_secs_f64();
        let text = toml::to_string(&self.manifest).map_err(CliError::data)?;
        let tmp = path.with_extension("toml.tmp");
        std::fs::write(&tmp, text).map_err(CliError::data)?;
        std::fs::rename(&tmp, path).map_err(CliError::data)?;
        Ok(())
    }
}
