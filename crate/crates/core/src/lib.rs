//! Temporal link-prediction benchmark toolkit for field-of-study
//! co-occurrence graphs.
//!
//! The pipeline runs: concept and work ingestion ([`ingest`]), the yearly
//! co-occurrence graph ([`graph`]), semantic node features ([`features`]),
//! negative and neighbor sampling ([`sampling`]), reference scorers
//! ([`baselines`]), the evaluation harness ([`evaluation`]) and dataset
//! diagnostics ([`diagnostics`]).

pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod graph;
pub mod ingest;
pub mod numeric;
pub mod sampling;
pub mod types;

pub use baselines::{EdgeBank, EdgeBankMode, LinkScorer, MlpScorer, RandomScorer};
pub use error::{Error, Result};
pub use evaluation::{auc_roc, average_precision, evaluate, rank_emerging, EvalConfig, EvalReport};
pub use graph::{EdgeEvent, SplitManifest, TemporalGraph};
pub use sampling::{NegativeRegime, NeighborStrategy, SamplerConfig};
pub use types::{FirstSeen, NodeId, Pair, Year, YearRange};
