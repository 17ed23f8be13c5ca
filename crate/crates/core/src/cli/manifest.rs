//! Provenance records written next to every artifact.
//!
//! A manifest carries the full parameter set of the command that produced a
//! directory, so `dacl rerun` can regenerate it from the manifest alone.
//! Worker counts are deliberately left out: outputs do not depend on them.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub params: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, FileDigest>,
    /// Paths relative to the manifest's directory.
    pub outputs: BTreeMap<String, FileDigest>,
    pub stats: BTreeMap<String, u64>,
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut BufReader::new(file), &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}

impl Manifest {
    pub fn new(command: &str, params: &impl Serialize) -> Self {
        Manifest {
            tool: format!("dacl {}", env!("CARGO_PKG_VERSION")),
            command: command.to_owned(),
            params: serde_json::to_value(params).expect("plain data"),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_owned(), value);
    }

    pub fn stat(&mut self, name: &str, value: usize) {
        self.stats.insert(name.to_owned(), value as u64);
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.insert(
            role.to_owned(),
            FileDigest {
                path: path.to_path_buf(),
                sha256,
            },
        );
        Ok(())
    }

    pub fn input_opt(&mut self, role: &str, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => self.input(role, p),
            None => Ok(()),
        }
    }

    /// Records `dir/file` under its relative name.
    pub fn output(&mut self, role: &str, dir: &Path, file: &str) -> Result<()> {
        let sha256 = sha256_file(dir.join(file))?;
        self.outputs.insert(
            role.to_owned(),
            FileDigest {
                path: PathBuf::from(file),
                sha256,
            },
        );
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fails when an input no longer has the recorded checksum.
    pub fn verify_inputs(&self) -> Result<()> {
        for (role, d) in &self.inputs {
            let now = sha256_file(&d.path)?;
            if now != d.sha256 {
                return Err(Error::InputChanged {
                    role: role.clone(),
                    path: d.path.clone(),
                });
            }
        }
        Ok(())
    }
}
