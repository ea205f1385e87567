use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Reads input files and remembers their content digests for the report.
#[derive(Debug, Default)]
pub struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = detsim::formats::read_file(path)?;
        self.digests.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    /// Reads `path` and parses it, attributing parse errors to the file.
    pub fn load<T>(&mut self, path: &Path, parse: impl FnOnce(&str) -> detsim::Result<T>) -> CliResult<T> {
        let text = self.read(path)?;
        parse(&text).map_err(|e| CliError::from(e).in_file(path))
    }

    pub fn into_digests(self) -> Vec<InputDigest> {
        self.digests
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything written to `--output`. Contains no timing, so identical
/// invocations give identical files.
#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, B: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub inputs: Vec<InputDigest>,
    pub body: B,
}

pub fn write_report<C: Serialize, B: Serialize>(
    output: Option<&PathBuf>,
    command: &'static str,
    config: C,
    inputs: Inputs,
    body: B,
) -> CliResult<()> {
    let Some(path) = output else {
        return Ok(());
    };
    let report = Report {
        tool: "detsim",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: inputs.into_digests(),
        body,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report types serialize");
    json.push('\n');
    detsim::formats::write_file(path, &json)?;
    Ok(())
}
