//! Run directories, result files and manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::LabResult;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub timings_ms: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> LabResult<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// A freshly created output directory that collects files and timings.
pub struct RunDir {
    path: PathBuf,
    files: Vec<String>,
    timings: BTreeMap<String, f64>,
}

impl RunDir {
    /// Creates `root/stem`, or `root/stem-2`, `root/stem-3`, … if taken.
    pub fn create(root: &Path, stem: &str) -> LabResult<Self> {
        fs::create_dir_all(root)?;
        let mut n = 1;
        loop {
            let name = if n == 1 { stem.to_string() } else { format!("{stem}-{n}") };
            let path = root.join(name);
            match fs::create_dir(&path) {
                Ok(()) => return Ok(Self { path, files: Vec::new(), timings: BTreeMap::new() }),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn csv<S: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = S>) -> LabResult<()> {
        let mut w = csv::Writer::from_path(self.path.join(name))?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<S: Serialize>(&mut self, name: &str, value: &S) -> LabResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        fs::write(self.path.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn timed<T>(&mut self, op: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.timings.entry(op.to_string()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }

    /// Writes the manifest and returns the directory.
    pub fn finish(self, config: &ExperimentConfig, threads: usize) -> LabResult<PathBuf> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: config.command().to_string(),
            config_sha256: config.hash(),
            seed: config.seed(),
            config: config.clone(),
            threads,
            timings_ms: self.timings,
            files: self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.path.join(MANIFEST), bytes)?;
        Ok(self.path)
    }
}
