use std::collections::HashMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LinkScorer;
use crate::error::{Error, Result};
use crate::graph::EdgeEvent;
use crate::types::{NodeId, Pair, Year};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EdgeBankMode {
    /// Remembers every pair ever observed.
    Infinite,
    /// Remembers pairs last observed within the trailing `years` before the query.
    TimeWindow { years: u32 },
}

impl fmt::Display for EdgeBankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeBankMode::Infinite => f.write_str("edgebank_inf"),
            EdgeBankMode::TimeWindow { years } => write!(f, "edgebank_tw{years}"),
        }
    }
}

/// Memorization baseline: 1 for remembered pairs, 0 otherwise.
#[derive(Debug, Clone)]
pub struct EdgeBank {
    mode: EdgeBankMode,
    last_seen: HashMap<Pair, Year>,
    observed: Option<Year>,
}

impl EdgeBank {
    pub fn new(mode: EdgeBankMode) -> Self {
        EdgeBank {
            mode,
            last_seen: HashMap::new(),
            observed: None,
        }
    }

    pub fn mode(&self) -> EdgeBankMode {
        self.mode
    }

    pub fn update(&mut self, events: &[EdgeEvent]) {
        for e in events {
            let slot = self.last_seen.entry(e.pair()).or_insert(e.year);
            *slot = (*slot).max(e.year);
        }
    }

    /// Score of `(u, v)` for a query at `t`.
    pub fn score_at(&self, u: NodeId, v: NodeId, t: Year) -> f64 {
        let Some(seen) = Pair::new(u, v).and_then(|p| self.last_seen.get(&p)) else {
            return 0.0;
        };
        let remembered = match self.mode {
            EdgeBankMode::Infinite => true,
            EdgeBankMode::TimeWindow { years } => *seen >= t - years as Year,
        };
        if remembered {
            1.0
        } else {
            0.0
        }
    }
}

impl LinkScorer for EdgeBank {
    fn name(&self) -> String {
        self.mode.to_string()
    }

    fn observe(&mut self, year: Year, events: &[EdgeEvent]) -> Result<()> {
        if self.observed.is_some_and(|y| year <= y) {
            return Err(Error::invalid(format!("year {year} observed out of order")));
        }
        self.update(events);
        self.observed = Some(year);
        Ok(())
    }

    fn observed_through(&self) -> Option<Year> {
        self.observed
    }

    fn score(&self, t: Year, pairs: &[(NodeId, NodeId)], _rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if let Some(y) = self.observed.filter(|&y| y >= t) {
            return Err(Error::TemporalLeakage { found: y, query: t });
        }
        Ok(pairs.iter().map(|&(u, v)| self.score_at(u, v, t)).collect())
    }
}
