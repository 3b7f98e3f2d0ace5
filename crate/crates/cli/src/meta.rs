//! Run metadata embedded in every JSON document, and output helpers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputFile>,
    pub parameters: Value,
}

impl Metadata {
    pub fn new(command: &'static str, inputs: &[&Path], parameters: Value) -> Result<Self> {
        Ok(Self {
            tool: "contagio",
            version: env!("CARGO_PKG_VERSION"),
            core_version: contagio::VERSION,
            command,
            inputs: inputs.iter().map(|p| hash_file(p)).collect::<Result<_>>()?,
            parameters,
        })
    }
}

pub fn hash_file(path: &Path) -> Result<InputFile> {
    let bytes = fs::read(path).map_err(|source| contagio::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(InputFile {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Pretty JSON to `out`, or to stdout when no path is given.
pub fn emit_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| {
        contagio::Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}
