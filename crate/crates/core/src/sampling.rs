//! Negative sampling regimes and temporal neighbor samplers.
//!
//! All sampling is driven by explicit ChaCha generators so identical seeds
//! give identical draws on every platform.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeEvent;
use crate::types::{NodeId, Pair, Year};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeRegime {
    Random,
    Historical,
    Inductive,
}

impl NegativeRegime {
    pub const ALL: [NegativeRegime; 3] = [
        NegativeRegime::Random,
        NegativeRegime::Historical,
        NegativeRegime::Inductive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeRegime::Random => "random",
            NegativeRegime::Historical => "historical",
            NegativeRegime::Inductive => "inductive",
        }
    }
}

impl fmt::Display for NegativeRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NegativeRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random" | "rnd" => Ok(NegativeRegime::Random),
            "historical" | "hist" => Ok(NegativeRegime::Historical),
            "inductive" | "ind" => Ok(NegativeRegime::Inductive),
            other => Err(Error::invalid(format!("unknown negative regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborStrategy {
    Uniform,
    Recent,
    TimeAware,
}

impl fmt::Display for NeighborStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborStrategy::Uniform => "uniform",
            NeighborStrategy::Recent => "recent",
            NeighborStrategy::TimeAware => "time_aware",
        })
    }
}

impl FromStr for NeighborStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(NeighborStrategy::Uniform),
            "recent" => Ok(NeighborStrategy::Recent),
            "time_aware" | "time-aware" | "time_interval_aware" => Ok(NeighborStrategy::TimeAware),
            other => Err(Error::invalid(format!("unknown neighbor strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub regime: NegativeRegime,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub neighbor_strategy: NeighborStrategy,
    /// Neighbor budget `S`.
    pub neighbor_budget: usize,
    /// Recency factor for time-aware sampling.
    pub alpha: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            regime: NegativeRegime::Random,
            negatives_per_positive: 1,
            seed: 0,
            neighbor_strategy: NeighborStrategy::Uniform,
            neighbor_budget: 20,
            alpha: 1e-6,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbor_budget == 0 {
            return Err(Error::invalid("neighbor budget must be at least 1"));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::invalid("negatives per positive must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Generator for an independent, reproducible stream derived from `(seed, stream)`.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Candidate pools for historical and inductive negatives.
#[derive(Debug, Clone)]
pub struct NegativePools {
    n: usize,
    train_edges: HashSet<Pair>,
    test_only_edges: HashSet<Pair>,
    active: HashMap<Year, HashSet<Pair>>,
    hist_partners: Vec<Vec<NodeId>>,
    ind_partners: Vec<Vec<NodeId>>,
}

/// One sampled negative destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeDraw {
    pub dst: NodeId,
    /// Drawn from the random pool because the regime pool ran short.
    pub fallback: bool,
}

fn partner_lists(n: usize, pairs: &HashSet<Pair>) -> Vec<Vec<NodeId>> {
    let mut lists = vec![Vec::new(); n];
    for p in pairs {
        lists[p.lo().index()].push(p.hi());
        lists[p.hi().index()].push(p.lo());
    }
    for l in &mut lists {
        l.sort_unstable();
    }
    lists
}

impl NegativePools {
    /// Builds pools from the train and test streams. `active_streams` supply
    /// the per-year edge sets used for the "absent at t" exclusion; pass every
    /// stream that will be evaluated.
    pub fn new(n: usize, train: &[EdgeEvent], test: &[EdgeEvent], active_streams: &[&[EdgeEvent]]) -> Self {
        let train_edges: HashSet<Pair> = train.iter().map(EdgeEvent::pair).collect();
        let test_only_edges: HashSet<Pair> = test
            .iter()
            .map(EdgeEvent::pair)
            .filter(|p| !train_edges.contains(p))
            .collect();
        let mut active: HashMap<Year, HashSet<Pair>> = HashMap::new();
        for stream in active_streams.iter().chain([&train, &test]) {
            for e in stream.iter() {
                active.entry(e.year).or_default().insert(e.pair());
            }
        }
        NegativePools {
            n,
            hist_partners: partner_lists(n, &train_edges),
            ind_partners: partner_lists(n, &test_only_edges),
            train_edges,
            test_only_edges,
            active,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn train_edges(&self) -> &HashSet<Pair> {
        &self.train_edges
    }

    pub fn test_only_edges(&self) -> &HashSet<Pair> {
        &self.test_only_edges
    }

    /// Whether the pair is an observed edge at year `t`.
    pub fn is_active(&self, pair: &Pair, t: Year) -> bool {
        self.active.get(&t).is_some_and(|s| s.contains(pair))
    }

    /// Pool membership of `(u, dst)` at `t` for a non-random regime.
    pub fn in_pool(&self, regime: NegativeRegime, u: NodeId, dst: NodeId, t: Year) -> bool {
        let Some(pair) = Pair::new(u, dst) else { return false };
        let pool = match regime {
            NegativeRegime::Random => return dst.index() < self.n,
            NegativeRegime::Historical => &self.train_edges,
            NegativeRegime::Inductive => &self.test_only_edges,
        };
        pool.contains(&pair) && !self.is_active(&pair, t)
    }

    /// Regime candidates for source `u` at year `t`, in node order.
    pub fn candidates(&self, regime: NegativeRegime, u: NodeId, t: Year) -> Vec<NodeId> {
        let partners = match regime {
            NegativeRegime::Random => return Vec::new(),
            NegativeRegime::Historical => &self.hist_partners[u.index()],
            NegativeRegime::Inductive => &self.ind_partners[u.index()],
        };
        partners
            .iter()
            .copied()
            .filter(|&c| !self.is_active(&Pair::new(u, c).expect("partners exclude u"), t))
            .collect()
    }

    /// Corrupts the destination of the positive `(u, v, t)` under `regime`.
    ///
    /// Regime pools are sampled without replacement; any shortfall is filled
    /// with uniform draws from `V \ {v}`.
    pub fn sample_negatives<R: Rng + ?Sized>(
        &self,
        u: NodeId,
        v: NodeId,
        t: Year,
        regime: NegativeRegime,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<NegativeDraw>> {
        if self.n < 2 {
            return Err(Error::invalid("vertex set too small to corrupt a destination"));
        }
        let mut out = Vec::with_capacity(count);
        if regime != NegativeRegime::Random {
            let cands = self.candidates(regime, u, t);
            let take = count.min(cands.len());
            for i in index::sample(rng, cands.len(), take) {
                out.push(NegativeDraw {
                    dst: cands[i],
                    fallback: false,
                });
            }
        }
        let fallback = regime != NegativeRegime::Random;
        while out.len() < count {
            let dst = uniform_excluding(self.n, v, rng);
            // without replacement while distinct destinations remain
            if out.len() < self.n - 1 && out.iter().any(|d| d.dst == dst) {
                continue;
            }
            out.push(NegativeDraw { dst, fallback });
        }
        Ok(out)
    }
}

/// Uniform draw from `{0..n} \ {excluded}`.
fn uniform_excluding<R: Rng + ?Sized>(n: usize, excluded: NodeId, rng: &mut R) -> NodeId {
    let x = rng.gen_range(0..n - 1);
    NodeId::from(if x >= excluded.index() { x + 1 } else { x })
}

/// Chronological per-node interaction lists.
#[derive(Debug, Clone, Default)]
pub struct InteractionHistory {
    per_node: Vec<Vec<(NodeId, Year)>>,
    last_year: Option<Year>,
}

impl InteractionHistory {
    pub fn new(n: usize) -> Self {
        InteractionHistory {
            per_node: vec![Vec::new(); n],
            last_year: None,
        }
    }

    /// Appends events; years must not decrease across calls.
    pub fn observe(&mut self, events: &[EdgeEvent]) -> Result<()> {
        for e in events {
            if self.last_year.is_some_and(|y| e.year < y) {
                return Err(Error::invalid(format!(
                    "history must be observed chronologically ({} after {:?})",
                    e.year, self.last_year
                )));
            }
            self.last_year = Some(e.year);
            self.per_node[e.u.index()].push((e.v, e.year));
            self.per_node[e.v.index()].push((e.u, e.year));
        }
        Ok(())
    }

    pub fn last_year(&self) -> Option<Year> {
        self.last_year
    }

    /// Interactions of `node` strictly before `t`.
    pub fn before(&self, node: NodeId, t: Year) -> &[(NodeId, Year)] {
        let all = &self.per_node[node.index()];
        &all[..all.partition_point(|&(_, y)| y < t)]
    }
}

/// Sampled neighbors plus the number of null-embedding pads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSample {
    pub neighbors: Vec<(NodeId, Year)>,
    pub pad: usize,
}

/// Selects up to `budget` neighbors from `history` for a query at `t`.
pub fn sample_neighbors<R: Rng + ?Sized>(
    t: Year,
    history: &[(NodeId, Year)],
    strategy: NeighborStrategy,
    budget: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<NeighborSample> {
    if budget == 0 {
        return Err(Error::invalid("neighbor budget must be at least 1"));
    }
    if let Some(&(_, found)) = history.iter().find(|&&(_, y)| y >= t) {
        return Err(Error::TemporalLeakage { found, query: t });
    }
    if history.len() <= budget {
        return Ok(NeighborSample {
            neighbors: history.to_vec(),
            pad: budget - history.len(),
        });
    }
    let neighbors = match strategy {
        NeighborStrategy::Uniform => index::sample(rng, history.len(), budget)
            .into_iter()
            .map(|i| history[i])
            .collect(),
        NeighborStrategy::Recent => {
            let mut sorted = history.to_vec();
            sorted.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            sorted.truncate(budget);
            sorted
        }
        NeighborStrategy::TimeAware => {
            let mut weights = time_aware_probabilities(t, history, alpha);
            let mut chosen = Vec::with_capacity(budget);
            for _ in 0..budget {
                let total: f64 = weights.iter().sum();
                let mut r = rng.gen::<f64>() * total;
                let mut pick = None;
                for (i, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
                let i = pick.expect("positive weight remains while budget < history length");
                chosen.push(history[i]);
                weights[i] = 0.0;
            }
            chosen
        }
    };
    Ok(NeighborSample { neighbors, pad: 0 })
}

/// `P(n_i) = exp(-alpha (t - t_i)) / sum_j exp(-alpha (t - t_j))`, computed with
/// the largest exponent shifted to zero.
pub fn time_aware_probabilities(t: Year, history: &[(NodeId, Year)], alpha: f64) -> Vec<f64> {
    let logits: Vec<f64> = history.iter().map(|&(_, y)| -alpha * (t - y) as f64).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}
