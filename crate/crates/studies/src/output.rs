//! Atomic report writing and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::StudyConfig;
use crate::StudyError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOLKIT: &str = "gridplan";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub toolkit: String,
    pub version: String,
    pub study: String,
    pub config: StudyConfig,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub created_unix: u64,
    pub exit_status: u8,
    pub findings: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Writes report files into one directory and remembers them for the manifest.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, StudyError> {
        fs::create_dir_all(dir).map_err(|e| StudyError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), StudyError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes()).map_err(|e| StudyError::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: format!("{:x}", Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    /// Deletes everything written so far.
    pub fn discard(self) {
        for a in &self.artifacts {
            let _ = fs::remove_file(self.dir.join(&a.path));
        }
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<PathBuf, StudyError> {
        manifest.artifacts = self.artifacts.clone();
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join(MANIFEST_NAME);
        if let Err(e) = write_atomic(&path, text.as_bytes()) {
            self.discard();
            return Err(StudyError::io(&path, e));
        }
        Ok(path)
    }
}

/// Manifest timestamp, honouring `SOURCE_DATE_EPOCH` for reproducible runs.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
