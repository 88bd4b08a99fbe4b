//! Scorers plugged into the evaluation harness.
//!
//! A scorer sees the edge stream one year at a time through
//! [`LinkScorer::observe`] and is queried for years strictly after the last
//! observed one. The harness never feeds a year before scoring it, so scorer
//! inputs cannot leak the evaluated edges.

mod edgebank;
mod mlp;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use edgebank::{EdgeBank, EdgeBankMode};
pub use mlp::{
    encode_node, encoder_input, gradient_check, score_pair, train, Adam, Checkpoint, EpochLog, Example,
    GradCheckReport, MlpScorer, PluginHyperparams, ScorerParams, ScorerShape, TrainConfig, TrainOutcome,
};

use crate::error::Result;
use crate::graph::EdgeEvent;
use crate::types::{NodeId, Year};

pub trait LinkScorer: Send + Sync {
    fn name(&self) -> String;

    /// Ingests every event of `year`. Years arrive in increasing order.
    fn observe(&mut self, year: Year, events: &[EdgeEvent]) -> Result<()>;

    /// Last year fed through [`LinkScorer::observe`].
    fn observed_through(&self) -> Option<Year>;

    /// Scores `(source, destination)` pairs as of year `t`.
    fn score(&self, t: Year, pairs: &[(NodeId, NodeId)], rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
}

/// Uniform random scores; the chance-level reference.
#[derive(Debug, Default, Clone)]
pub struct RandomScorer {
    observed: Option<Year>,
}

impl LinkScorer for RandomScorer {
    fn name(&self) -> String {
        "random".into()
    }

    fn observe(&mut self, year: Year, _events: &[EdgeEvent]) -> Result<()> {
        self.observed = Some(year);
        Ok(())
    }

    fn observed_through(&self) -> Option<Year> {
        self.observed
    }

    fn score(&self, _t: Year, pairs: &[(NodeId, NodeId)], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(pairs.iter().map(|_| rng.gen::<f64>()).collect())
    }
}
