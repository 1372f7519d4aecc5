//! Output directory: lock file, per-command output folders and the hash manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Incremental hash over labelled parts, used for command input fingerprints.
#[derive(Default)]
pub struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn part(mut self, label: &str, bytes: &[u8]) -> Self {
        for chunk in [label.as_bytes(), &(bytes.len() as u64).to_le_bytes(), bytes] {
            self.0.update(chunk);
        }
        self
    }

    pub fn file(self, label: &str, path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(self.part(label, &bytes))
    }

    pub fn json<T: Serialize>(self, label: &str, value: &T) -> Self {
        let bytes = serde_json::to_vec(value).expect("config serializes");
        self.part(label, &bytes)
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEntry {
    pub input_hash: String,
    /// Path relative to the output directory -> sha256 of its content.
    pub outputs: BTreeMap<String, String>,
}

impl CommandEntry {
    pub fn outputs_hash(&self) -> String {
        Fingerprint::default().json("outputs", &self.outputs).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub commands: BTreeMap<String, CommandEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self { format_version: 1, commands: BTreeMap::new() }
    }
}

/// Exclusive handle on an output directory; the lock file is removed on drop.
pub struct Workspace {
    root: PathBuf,
    manifest: Manifest,
    lock: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::Locked(root.display().to_string()));
            }
            Err(e) => return Err(CliError::io(&lock, e)),
        }
        let mut ws = Self { root: root.to_path_buf(), manifest: Manifest::default(), lock };
        let path = ws.root.join(MANIFEST_FILE);
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            ws.manifest = serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Why the recorded outputs of `command` cannot be trusted, if they cannot.
    pub fn check(&self, command: &str) -> Option<String> {
        let Some(entry) = self.manifest.commands.get(command) else {
            return Some("no manifest entry".into());
        };
        for (rel, hash) in &entry.outputs {
            match fs::read(self.path(rel)) {
                Ok(bytes) if sha256_hex(&bytes) == *hash => {}
                Ok(_) => return Some(format!("{rel} changed since it was written")),
                Err(_) => return Some(format!("{rel} is missing")),
            }
        }
        None
    }

    /// Output fingerprint of a predecessor whose files are intact.
    pub fn require(&self, command: &str, needs: &str) -> Result<String, CliError> {
        match self.check(needs) {
            None => Ok(self.manifest.commands[needs].outputs_hash()),
            Some(reason) => Err(CliError::MissingPredecessor { command: command.into(), needs: needs.into(), reason }),
        }
    }

    /// Whether `command` already ran on these inputs and its outputs are intact.
    pub fn is_current(&self, command: &str, input_hash: &str) -> bool {
        self.manifest.commands.get(command).is_some_and(|e| e.input_hash == input_hash) && self.check(command).is_none()
    }

    /// Clears the command's folder and returns a writer for it.
    pub fn begin(&self, command: &str) -> Result<Outputs, CliError> {
        let dir = self.path(command);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Outputs { root: self.root.clone(), command: command.into(), files: BTreeMap::new() })
    }

    pub fn commit(&mut self, outputs: Outputs, input_hash: String) -> Result<(), CliError> {
        self.manifest.commands.insert(outputs.command, CommandEntry { input_hash, outputs: outputs.files });
        let path = self.path(MANIFEST_FILE);
        let tmp = self.path("manifest.json.tmp");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Files written by one command, hashed as they are written.
pub struct Outputs {
    root: PathBuf,
    command: String,
    files: BTreeMap<String, String>,
}

impl Outputs {
    pub fn rel(&self, name: &str) -> String {
        format!("{}/{name}", self.command)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(self.rel(name))
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes.as_ref()).map_err(|e| CliError::io(&path, e))?;
        self.files.insert(self.rel(name), sha256_hex(bytes.as_ref()));
        Ok(())
    }

    /// Records a file that was written to [`Outputs::path`] by other means.
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.path(name);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.files.insert(self.rel(name), sha256_hex(&bytes));
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &legis_core::table::Table) -> Result<(), CliError> {
        self.write(name, table.to_csv_string())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, serde_json::to_string_pretty(value).expect("serializes") + "\n")
    }
}
