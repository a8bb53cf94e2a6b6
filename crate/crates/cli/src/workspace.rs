//! Output directory handling: the run lock, atomic writes and the per-run
//! manifest that lists every file a subcommand produced.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const LOCK_FILE: &str = ".lock";
pub const MANIFEST_DIR: &str = "manifests";

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok((hex(&Sha256::digest(&bytes)), bytes.len() as u64))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Held for the duration of a subcommand; removed on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(CliError::io(out))?;
        let path = out.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked {
                dir: out.to_path_buf(),
                lock: path,
            }),
            Err(e) => Err(CliError::Io { path, source: e }),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
    pub started_at: DateTime<Utc>,
    pub elapsed_ms: u128,
    pub summary: serde_json::Value,
}

/// Tracks what one subcommand writes below the output directory.
pub struct Workspace {
    out: PathBuf,
    written: BTreeSet<String>,
    inputs: Vec<Artifact>,
}

fn rel_string(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

impl Workspace {
    pub fn new(out: &Path) -> Self {
        Workspace {
            out: out.to_path_buf(),
            written: BTreeSet::new(),
            inputs: Vec::new(),
        }
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.out.join(rel)
    }

    /// Write `bytes` to a temporary sibling and rename it into place.
    pub fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let rel = rel.as_ref();
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        let tmp = path.with_extension("tmp~");
        fs::write(&tmp, bytes).map_err(CliError::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(CliError::io(&path))?;
        self.written.insert(rel_string(rel));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Render into memory, then write atomically.
    pub fn write_with<F>(&mut self, rel: impl AsRef<Path>, render: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(rel, &buf)
    }

    /// Register a file written by library code.
    pub fn record(&mut self, rel: impl AsRef<Path>) {
        self.written.insert(rel_string(rel.as_ref()));
    }

    /// Register every regular file below `rel`.
    pub fn record_dir(&mut self, rel: impl AsRef<Path>) -> Result<(), CliError> {
        let dir = self.out.join(rel.as_ref());
        let mut entries: Vec<_> = fs::read_dir(&dir)
            .map_err(CliError::io(&dir))?
            .filter_map(Result::ok)
            .collect();
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let rel_child = rel.as_ref().join(e.file_name());
            if e.path().is_dir() {
                self.record_dir(&rel_child)?;
            } else {
                self.record(rel_child);
            }
        }
        Ok(())
    }

    /// Note an input file and its checksum in the manifest. Paths inside the
    /// output directory are stored relative to it.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let (sha256, bytes) = sha256_file(path)?;
        let shown = path
            .strip_prefix(&self.out)
            .map(rel_string)
            .unwrap_or_else(|_| path.display().to_string());
        self.inputs.push(Artifact {
            path: shown,
            sha256,
            bytes,
        });
        Ok(())
    }

    pub fn finish(
        self,
        subcommand: &str,
        config: &RunConfig,
        started_at: DateTime<Utc>,
        clock: Instant,
        summary: serde_json::Value,
    ) -> Result<RunManifest, CliError> {
        let artifacts = self
            .written
            .iter()
            .map(|rel| {
                let (sha256, bytes) = sha256_file(&self.out.join(rel))?;
                Ok(Artifact {
                    path: rel.clone(),
                    sha256,
                    bytes,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let config_text = toml::to_string(config).map_err(|e| CliError::Runtime(e.to_string()))?;
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: hex(&Sha256::digest(config_text.as_bytes())),
            config: config.clone(),
            inputs: self.inputs.clone(),
            artifacts,
            started_at,
            elapsed_ms: clock.elapsed().as_millis(),
            summary,
        };
        let mut tmp_ws = Workspace::new(&self.out);
        tmp_ws.write_json(Path::new(MANIFEST_DIR).join(format!("{subcommand}.json")), &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(matches!(OutputLock::acquire(dir.path()), Err(CliError::Locked { .. })));
        drop(a);
        OutputLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn writes_are_recorded_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::new(dir.path());
        ws.write("a/b.txt", b"abc").unwrap();
        let m = ws
            .finish("test", &RunConfig::default(), Utc::now(), Instant::now(), serde_json::Value::Null)
            .unwrap();
        assert_eq!(m.artifacts.len(), 1);
        assert_eq!(m.artifacts[0].path, "a/b.txt");
        assert_eq!(
            m.artifacts[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(dir.path().join("manifests/test.json").exists());
    }
}
