//! Run configuration: defaults, TOML/JSON loading, flag overrides and the
//! config hash stamped into every output.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fosbench_core::baselines::TrainConfig;
use fosbench_core::diagnostics::DiagnosticsConfig;
use fosbench_core::features::{FeatureKind, FeatureMask};
use fosbench_core::graph::SplitManifest;
use fosbench_core::{NegativeRegime, SamplerConfig, Year, YearRange};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Bad invocation or configuration (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    Edgebank,
    EdgebankTw,
    Random,
    Model,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "edgebank" | "edgebank-inf" => Ok(ScorerKind::Edgebank),
            "edgebank-tw" => Ok(ScorerKind::EdgebankTw),
            "random" => Ok(ScorerKind::Random),
            "model" => Ok(ScorerKind::Model),
            other => Err(format!(
                "unknown scorer `{other}` (edgebank, edgebank-tw, random, model)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Terms left out of the sum, e.g. `["desc"]`.
    pub drop: Vec<FeatureKind>,
    /// Target PCA dimension; 0 keeps the raw vectors.
    pub pca_dim: usize,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings {
            drop: Vec::new(),
            pca_dim: 100,
        }
    }
}

impl FeatureSettings {
    pub fn mask(&self) -> FeatureMask {
        self.drop.iter().fold(FeatureMask::default(), |m, &k| m.without(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub scorer: ScorerKind,
    pub regimes: Vec<NegativeRegime>,
    pub batch_size: usize,
    /// Trailing window of the `edgebank-tw` scorer, in years.
    pub window: u32,
    /// Also write the per-batch audit CSV.
    pub audit: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            scorer: ScorerKind::Edgebank,
            regimes: NegativeRegime::ALL.to_vec(),
            batch_size: 300,
            window: 3,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSettings {
    /// Reference year; defaults to the year before the test range.
    pub year: Option<Year>,
    pub top_k: usize,
    /// Per-source beam width; 0 scores every candidate pair.
    pub beam: usize,
    pub max_candidates: usize,
}

impl Default for PredictSettings {
    fn default() -> Self {
        PredictSettings {
            year: None,
            top_k: 100,
            beam: 0,
            max_candidates: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input and output paths are not part of the config hash; the manifest
    /// records input files by content hash instead.
    #[serde(skip_serializing)]
    pub concepts: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub works: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Root field ids kept by the domain filter; empty keeps everything.
    pub roots: Vec<String>,
    pub horizon: YearRange,
    pub strict: bool,
    pub drop_ancestor_pairs: bool,
    /// Master seed, copied into every component.
    pub seed: u64,
    pub manifest: SplitManifest,
    pub sampler: SamplerConfig,
    pub train: TrainConfig,
    pub features: FeatureSettings,
    pub eval: EvalSettings,
    pub diagnose: DiagnosticsConfig,
    pub predict: PredictSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            concepts: None,
            works: None,
            embeddings: None,
            out: None,
            roots: Vec::new(),
            horizon: YearRange::new(2002, 2024).expect("valid range"),
            strict: false,
            drop_ancestor_pairs: false,
            seed: 0,
            manifest: SplitManifest::canonical(),
            sampler: SamplerConfig::default(),
            train: TrainConfig::default(),
            features: FeatureSettings::default(),
            eval: EvalSettings::default(),
            diagnose: DiagnosticsConfig::default(),
            predict: PredictSettings::default(),
        }
    }
}

impl RunConfig {
    /// Reads a `.toml` or `.json` file. Relative paths inside are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
            _ => toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.concepts, &mut cfg.works, &mut cfg.embeddings, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Copies the master seed into the components and checks ranges.
    pub fn finalize(&mut self) -> Result<()> {
        self.sampler.seed = self.seed;
        self.train.seed = self.seed;
        self.diagnose.seed = self.seed;
        if let Some(&first) = self.eval.regimes.first() {
            self.sampler.regime = first;
        } else {
            return Err(usage("at least one negative-sampling regime is required"));
        }
        self.sampler.validate().map_err(|e| usage(e.to_string()))?;
        self.manifest
            .validate(Some(self.horizon))
            .map_err(|e| usage(e.to_string()))?;
        if self.eval.batch_size == 0 {
            return Err(usage("eval batch size must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| usage("no run directory: pass --out or set `out` in the config"))
    }
}
