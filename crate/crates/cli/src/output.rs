//! Artifact writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const ARTIFACT_VERSION: &str = concat!("zhang-cli ", env!("CARGO_PKG_VERSION"));
pub const MANIFEST: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub command: String,
    /// `ok`, or `partial` when a budget cut the run short.
    pub status: String,
    pub notes: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub config: RunConfig,
}

/// Collects the files of one run; everything is written from this thread.
pub struct Sink {
    dir: PathBuf,
    formats: Vec<String>,
    artifacts: Vec<Artifact>,
    pub notes: Vec<String>,
    pub partial: bool,
}

impl Sink {
    pub fn new(dir: &Path, formats: &[String]) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Sink { dir: dir.to_path_buf(), formats: formats.to_vec(), artifacts: Vec::new(), notes: Vec::new(), partial: false })
    }

    fn enabled(&self, kind: &str) -> bool {
        self.formats.iter().any(|f| f == kind)
    }

    pub fn bytes(&mut self, name: &str, kind: &str, data: &[u8]) -> anyhow::Result<()> {
        if !self.enabled(kind) {
            return Ok(());
        }
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, data).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push(Artifact { file: name.into(), sha256: hex(&Sha256::digest(data)), bytes: data.len() as u64 });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.bytes(name, "json", &data)
    }

    /// A CSV table; the header is written even when there are no rows.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        if !self.enabled("csv") {
            return Ok(());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let data = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.bytes(name, "csv", &data)
    }

    /// Writes `manifest.toml` next to the artifacts.
    pub fn finish(self, command: &str, config: &RunConfig) -> anyhow::Result<Manifest> {
        let m = Manifest {
            artifact_version: ARTIFACT_VERSION.into(),
            command: command.into(),
            status: if self.partial { "partial".into() } else { "ok".into() },
            notes: self.notes,
            artifacts: self.artifacts,
            config: config.clone(),
        };
        fs::write(self.dir.join(MANIFEST), toml::to_string(&m)?)?;
        Ok(m)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
