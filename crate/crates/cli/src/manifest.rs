use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize, Debug)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: serde_json::Value,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `trace.csv` -> `trace.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Writes every output, then the manifest listing them. On any failure the
/// files written so far are removed.
pub fn write_all(
    files: &[(PathBuf, String)],
    command: &str,
    config_echo: serde_json::Value,
    started: DateTime<Utc>,
) -> std::io::Result<PathBuf> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        let mut outputs = Vec::with_capacity(files.len());
        for (path, content) in files {
            fs::write(path, content)?;
            written.push(path.clone());
            outputs.push(OutputFile {
                path: path.display().to_string(),
                sha256: sha256_hex(content.as_bytes()),
            });
        }
        let manifest = RunManifest {
            command: command.to_string(),
            config_echo,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: timestamp(started),
            finished_at: timestamp(Utc::now()),
            outputs,
        };
        let path = manifest_path(&files[0].0);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    })();
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}
