//! Output writing. Every file carries the provenance block: CSV files as
//! leading `#` comment lines, JSON files as a top-level `provenance` field.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::Provenance;
use crate::CliError;

pub struct OutputWriter {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Internal(format!("cannot create {}: {e}", dir.display()))
        })?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Write a CSV produced by `body` under the provenance header.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    {
        let mut bytes = self.provenance.csv_header().into_bytes();
        body(&mut bytes)?;
        self.write_bytes(name, &bytes)
    }

    /// Write a serializable payload as pretty JSON with the provenance
    /// field added.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<(), CliError> {
        let mut value = serde_json::to_value(payload)
            .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
        let provenance = serde_json::to_value(&self.provenance)
            .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
        match &mut value {
            Value::Object(map) => {
                map.insert("provenance".to_string(), provenance);
            }
            other => {
                let mut map = serde_json::Map::new();
                map.insert("provenance".to_string(), provenance);
                map.insert("data".to_string(), other.take());
                value = Value::Object(map);
            }
        }
        let mut text = serde_json::to_string_pretty(&value)
            .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Write a Newick tree under the `#` provenance header. Readers of
    /// these files (including this tool) skip `#` lines.
    pub fn newick(&mut self, name: &str, tree: &str) -> Result<(), CliError> {
        let mut text = self.provenance.csv_header();
        text.push_str(tree);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }
}
