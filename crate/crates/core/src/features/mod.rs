//! Semantic node features: a sinusoidal encoding of the hierarchy level plus
//! text embeddings of the name, description, ancestor labels and related
//! concepts, summed elementwise and optionally reduced with PCA.

mod embedding;
mod pca;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embedding::{escape_key, unescape_key, EmbeddingTable};
pub use pca::{pca_fit, PcaBasis};

use crate::error::{Error, Result};
use crate::ingest::{ConceptCatalog, ConceptRecord};
use crate::numeric::exact_sum;

/// Sinusoidal encoding of a scalar position into `d` dimensions:
/// entry `2j` is `sin(pos / 10000^(2j/d))`, entry `2j+1` the matching cosine.
pub fn sinusoidal_encoding(position: f64, d: usize) -> Result<Vec<f64>> {
    if d < 2 || d % 2 != 0 {
        return Err(Error::invalid(format!(
            "encoding dimension must be even and >= 2, got {d}"
        )));
    }
    let mut out = Vec::with_capacity(d);
    for j in 0..d / 2 {
        let angle = position / 10000f64.powf((2 * j) as f64 / d as f64);
        out.push(angle.sin());
        out.push(angle.cos());
    }
    Ok(out)
}

/// Hierarchy-level feature `f1`.
pub fn level_encoding(level: u32, d: usize) -> Result<Vec<f64>> {
    sinusoidal_encoding(level as f64, d)
}

/// Mean of the keys' vectors; the zero vector when `keys` is empty.
pub fn mean_aggregate<S: AsRef<str>>(keys: &[S], table: &EmbeddingTable) -> Result<Vec<f64>> {
    let d = table.dim();
    if keys.is_empty() {
        return Ok(vec![0.0; d]);
    }
    let vectors = keys
        .iter()
        .map(|k| table.lookup(k.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let m = vectors.len() as f64;
    Ok((0..d).map(|i| exact_sum(vectors.iter().map(|v| v[i])) / m).collect())
}

/// The five feature terms, in summation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Level,
    Name,
    Desc,
    Ancestor,
    Related,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Level,
        FeatureKind::Name,
        FeatureKind::Desc,
        FeatureKind::Ancestor,
        FeatureKind::Related,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Level => "level",
            FeatureKind::Name => "name",
            FeatureKind::Desc => "desc",
            FeatureKind::Ancestor => "ancestor",
            FeatureKind::Related => "related",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("w/o").map(str::trim).unwrap_or(&s);
        match s {
            "level" => Ok(FeatureKind::Level),
            "name" => Ok(FeatureKind::Name),
            "desc" | "description" => Ok(FeatureKind::Desc),
            "ancestor" | "ancestors" => Ok(FeatureKind::Ancestor),
            "related" => Ok(FeatureKind::Related),
            other => Err(Error::invalid(format!("unknown feature `{other}`"))),
        }
    }
}

/// Which feature terms enter the sum. Default: all five.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    enabled: [bool; 5],
}

impl Default for FeatureMask {
    fn default() -> Self {
        FeatureMask { enabled: [true; 5] }
    }
}

impl FeatureMask {
    pub fn without(mut self, kind: FeatureKind) -> Self {
        self.enabled[kind as usize] = false;
        self
    }

    pub fn includes(&self, kind: FeatureKind) -> bool {
        self.enabled[kind as usize]
    }

    /// Parses a comma-separated list of features to drop, e.g. `desc` or `w/o desc,level`.
    pub fn dropping(spec: &str) -> Result<Self> {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .try_fold(FeatureMask::default(), |m, s| Ok(m.without(s.parse()?)))
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dropped: Vec<_> = FeatureKind::ALL
            .iter()
            .filter(|k| !self.includes(**k))
            .map(|k| k.as_str())
            .collect();
        if dropped.is_empty() {
            f.write_str("full")
        } else {
            write!(f, "w/o {}", dropped.join(","))
        }
    }
}

/// The five terms for one node, each of the table's dimension.
pub fn feature_terms(record: &ConceptRecord, table: &EmbeddingTable) -> Result<[Vec<f64>; 5]> {
    let d = table.dim();
    let level = level_encoding(record.level, d)?;
    let name = table.lookup(&record.display_name)?.to_vec();
    let desc = match &record.description {
        Some(text) => table.lookup(text)?.to_vec(),
        None => vec![0.0; d],
    };
    let ancestor = mean_aggregate(&record.ancestor_names, table)?;
    let related = mean_aggregate(&record.related_texts, table)?;
    Ok([level, name, desc, ancestor, related])
}

/// `e_v` for one node: the correctly rounded elementwise sum of the enabled terms.
pub fn compose_node(record: &ConceptRecord, table: &EmbeddingTable, mask: FeatureMask) -> Result<Vec<f64>> {
    let terms = feature_terms(record, table)?;
    let active: Vec<&Vec<f64>> = FeatureKind::ALL
        .iter()
        .zip(&terms)
        .filter(|(k, _)| mask.includes(**k))
        .map(|(_, t)| t)
        .collect();
    Ok((0..table.dim())
        .map(|i| exact_sum(active.iter().map(|t| t[i])))
        .collect())
}

/// Raw and reduced per-field feature vectors in catalog (vertex) order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatureTable {
    pub ids: Vec<String>,
    pub raw: Vec<Vec<f64>>,
    pub reduced: Option<Vec<Vec<f64>>>,
    pub basis: Option<PcaBasis>,
}

/// Composes raw features for every catalog field.
pub fn compose(catalog: &ConceptCatalog, table: &EmbeddingTable, mask: FeatureMask) -> Result<NodeFeatureTable> {
    if table.dim() < 2 || table.dim() % 2 != 0 {
        return Err(Error::invalid(format!(
            "embedding dimension must be even, got {}",
            table.dim()
        )));
    }
    let records: Vec<&ConceptRecord> = catalog.records().collect();
    let raw = records
        .par_iter()
        .map(|r| compose_node(r, table, mask))
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeFeatureTable {
        ids: records.iter().map(|r| r.field_id.clone()).collect(),
        raw,
        reduced: None,
        basis: None,
    })
}

impl NodeFeatureTable {
    pub fn raw_dim(&self) -> usize {
        self.raw.first().map_or(0, Vec::len)
    }

    /// Fits PCA over all nodes and stores the basis and reduced vectors.
    pub fn reduce(&mut self, k: usize) -> Result<()> {
        let basis = pca_fit(&self.raw, k)?;
        let reduced = self
            .raw
            .iter()
            .map(|x| basis.transform(x))
            .collect::<Result<Vec<_>>>()?;
        self.reduced = Some(reduced);
        self.basis = Some(basis);
        Ok(())
    }

    /// Reduced vectors when present, raw otherwise.
    pub fn model_inputs(&self) -> &[Vec<f64>] {
        self.reduced.as_deref().unwrap_or(&self.raw)
    }

    fn as_table(ids: &[String], rows: &[Vec<f64>]) -> Result<EmbeddingTable> {
        let mut t = EmbeddingTable::new(rows.first().map_or(0, Vec::len));
        for (id, row) in ids.iter().zip(rows) {
            t.insert(id.clone(), row.clone())?;
        }
        Ok(t)
    }

    pub fn write_raw<W: Write>(&self, w: W, metadata: &[String]) -> Result<()> {
        Self::as_table(&self.ids, &self.raw)?.write(w, metadata)
    }

    pub fn write_reduced<W: Write>(&self, w: W, metadata: &[String]) -> Result<()> {
        let rows = self
            .reduced
            .as_ref()
            .ok_or_else(|| Error::invalid("features not reduced"))?;
        Self::as_table(&self.ids, rows)?.write(w, metadata)
    }

    /// Loads a feature file (same grammar as embedding tables) in `ids` order.
    pub fn from_table(ids: &[String], table: &EmbeddingTable) -> Result<Vec<Vec<f64>>> {
        ids.iter().map(|id| table.lookup(id).map(<[f64]>::to_vec)).collect()
    }
}
