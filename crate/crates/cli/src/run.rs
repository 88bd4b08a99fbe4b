//! Run directory: stamped output files and the `manifest.json` index.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

/// JSON output with the stamp fields in front of the body.
#[derive(Debug, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StepRecord {
    config_hash: String,
    seed: u64,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    steps: BTreeMap<String, StepRecord>,
}

pub struct RunDir {
    root: PathBuf,
    step: &'static str,
    hash: String,
    seed: u64,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunDir {
    pub fn open(cfg: &RunConfig, step: &'static str) -> Result<Self> {
        let root = cfg.out_dir()?.to_path_buf();
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir {
            root,
            step,
            hash: cfg.hash(),
            seed: cfg.seed,
            config: serde_json::to_value(cfg)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Metadata lines for text formats.
    pub fn stamp_lines(&self) -> Vec<String> {
        vec![
            format!("fosbench {} {}", self.step, env!("CARGO_PKG_VERSION")),
            format!("config_hash={}", self.hash),
            format!("seed={}", self.seed),
        ]
    }

    pub fn stamp<T>(&self, body: T) -> Stamped<T> {
        Stamped {
            config_hash: self.hash.clone(),
            seed: self.seed,
            body,
        }
    }

    /// Records an input file by content hash.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes raw bytes that already carry their stamp.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(path)
    }

    /// Text with `# ` metadata lines prepended (CSV and plain tables).
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let mut out = String::new();
        for line in self.stamp_lines() {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(body);
        self.write_bytes(name, out.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(&self.stamp(body))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Updates `manifest.json` with this step's record.
    pub fn finish(self) -> Result<()> {
        let path = self.root.join(MANIFEST);
        let mut manifest: Manifest = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?,
            Err(_) => Manifest::default(),
        };
        manifest.tool = "fosbench".into();
        manifest.version = env!("CARGO_PKG_VERSION").into();
        manifest.steps.insert(
            self.step.to_string(),
            StepRecord {
                config_hash: self.hash,
                seed: self.seed,
                config: self.config,
                inputs: self.inputs,
                outputs: self.outputs,
            },
        );
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Reads a stamped JSON file written by an earlier step.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Stamped<T>> {
    let bytes = fs::read(path).with_context(|| format!("reading {} (run the producing step first)", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}
