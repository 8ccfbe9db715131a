//! Atomic artifact writes and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::formats::to_json;
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io_error(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ArtifactRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub sysvar: &'static str,
    pub sysvar_core: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub config: &'a C,
    /// Hash of the subcommand and its parameters; thread count and logging
    /// are left out since they do not change any artifact.
    pub config_hash: String,
    pub versions: Versions,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub artifacts: Vec<ArtifactRecord>,
}

pub fn manifest_bytes<C: Serialize>(
    config: &C,
    config_hash: String,
    wall_time_seconds: f64,
    exit_code: i32,
    artifacts: Vec<ArtifactRecord>,
) -> Vec<u8> {
    let m = Manifest {
        config,
        config_hash,
        versions: Versions { sysvar: env!("CARGO_PKG_VERSION"), sysvar_core: sysvar_core::VERSION },
        wall_time_seconds,
        exit_code,
        artifacts,
    };
    to_json(&m)
}
