//! Subcommand implementations.

pub mod eval;
pub mod optimize;
pub mod psog;
pub mod report;
pub mod scene;

use std::path::Path;

use sogrid_core::{ClassTable, MetricMode};

use crate::errors::{CliError, CliResult};

/// Resolves a metric mode string, accepting class names or ids after
/// `detection:`.
pub fn resolve_mode(text: &str, classes: &ClassTable) -> CliResult<MetricMode> {
    let text = text.trim();
    if let Some(target) = text.strip_prefix("detection:") {
        let id = match classes.id_of(target) {
            Some(id) => id,
            None => target.parse::<u16>().map_err(|_| {
                CliError::usage(format!(
                    "unknown detection target `{target}` (classes: {})",
                    classes.names().join(", ")
                ))
            })?,
        };
        if id as usize >= classes.len() {
            return Err(CliError::usage(format!("class id {id} out of range")));
        }
        if id == classes.empty_class() {
            return Err(CliError::usage("detection target cannot be the empty class"));
        }
        return Ok(MetricMode::Detection { target_class: id });
    }
    text.parse().map_err(CliError::usage)
}

/// Writes a file atomically via a sibling temp file.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let mut ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_default();
    ext.push_str(".tmp");
    let tmp = path.with_extension(ext);
    std::fs::write(&tmp, contents).map_err(CliError::data)?;
    std::fs::rename(&tmp, path).map_err(CliError::data)?;
    Ok(())
}
