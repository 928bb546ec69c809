use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Pretty JSON with a trailing newline; parent directories are created.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Rejects documents of another kind or a newer version.
pub fn check_format(path: &Path, format: &str, version: u32, expected: &str, supported: u32) -> Result<()> {
    if format != expected {
        return Err(CliError::Input(format!("{}: expected a {expected} file, found {format}", path.display())));
    }
    if version > supported {
        return Err(CliError::Input(format!(
            "{}: {expected} version {version} is newer than supported version {supported}",
            path.display()
        )));
    }
    Ok(())
}
