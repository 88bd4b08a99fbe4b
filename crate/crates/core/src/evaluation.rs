//! Batch metrics, the chronological evaluation harness and emerging-link ranking.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::LinkScorer;
use crate::error::{Error, Result};
use crate::graph::{EdgeEvent, TemporalGraph};
use crate::sampling::{derive_rng, NegativePools, NegativeRegime};
use crate::types::{NodeId, Pair, Year};

/// Scores and labels of one evaluated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBatch {
    pub year: Year,
    pub regime: NegativeRegime,
    pub scores: Vec<(f64, bool)>,
}

fn check_scores(scores: &[(f64, bool)]) -> Result<(usize, usize)> {
    if let Some((s, _)) = scores.iter().find(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let pos = scores.iter().filter(|(_, y)| *y).count();
    Ok((pos, scores.len() - pos))
}

/// Indices sorted by decreasing score.
fn descending(scores: &[(f64, bool)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].0.total_cmp(&scores[a].0));
    order
}

/// `AP = sum_n (R_n - R_{n-1}) P_n` over distinct score thresholds, tied
/// scores entering at a single threshold.
pub fn average_precision(scores: &[(f64, bool)]) -> Result<f64> {
    let (pos, _) = check_scores(scores)?;
    if pos == 0 {
        return Err(Error::invalid("average precision needs at least one positive"));
    }
    let order = descending(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]].0;
        while i < order.len() && scores[order[i]].0 == threshold {
            if scores[order[i]].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Probability that a random positive outscores a random negative, ties counting half.
pub fn auc_roc(scores: &[(f64, bool)]) -> Result<f64> {
    let (pos, neg) = check_scores(scores)?;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("AUC needs both positive and negative labels"));
    }
    let mut order = descending(scores);
    order.reverse();
    // twice the Mann-Whitney count, kept integral
    let mut doubled: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]].0;
        let (mut p, mut n) = (0u128, 0u128);
        while i < order.len() && scores[order[i]].0 == threshold {
            if scores[order[i]].1 {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        doubled += p * (2 * neg_below + n);
        neg_below += n;
    }
    Ok(doubled as f64 / (2.0 * pos as f64 * neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub regimes: Vec<NegativeRegime>,
    pub batch_size: usize,
    pub seed: u64,
    pub negatives_per_positive: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            regimes: NegativeRegime::ALL.to_vec(),
            batch_size: 300,
            seed: 0,
            negatives_per_positive: 1,
        }
    }
}

/// Metrics of one batch under one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub year: Year,
    pub regime: NegativeRegime,
    pub batch: usize,
    pub positives: usize,
    pub negatives: usize,
    /// Negatives drawn uniformly because the regime pool ran short.
    pub fallback_negatives: usize,
    pub ap: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearMetrics {
    pub year: Year,
    pub batches: usize,
    pub mean_ap: f64,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: NegativeRegime,
    /// Mean over batches within each year, then over years.
    pub mean_ap: f64,
    pub mean_auc: f64,
    /// Mean over all batches pooled.
    pub flat_mean_ap: f64,
    pub flat_mean_auc: f64,
    pub batches: usize,
    pub fallback_negatives: usize,
    pub per_year: Vec<YearMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub aggregation: String,
    pub config: EvalConfig,
    pub regimes: Vec<RegimeReport>,
    #[serde(skip)]
    pub batches: Vec<BatchResult>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

impl EvalReport {
    pub fn regime(&self, regime: NegativeRegime) -> Option<&RegimeReport> {
        self.regimes.iter().find(|r| r.regime == regime)
    }

    /// Fixed-width table: one row per regime and year, then the aggregates.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scorer: {}", self.scorer);
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>8} {:>8} {:>8}",
            "regime", "year", "batches", "AP", "AUC"
        );
        for r in &self.regimes {
            for y in &r.per_year {
                let _ = writeln!(
                    out,
                    "{:<12} {:>6} {:>8} {:>8.4} {:>8.4}",
                    r.regime.as_str(),
                    y.year,
                    y.batches,
                    y.mean_ap,
                    y.mean_auc
                );
            }
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>8} {:>8.4} {:>8.4}",
                r.regime.as_str(),
                "mean",
                r.batches,
                r.mean_ap,
                r.mean_auc
            );
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>8} {:>8.4} {:>8.4}",
                r.regime.as_str(),
                "flat",
                r.batches,
                r.flat_mean_ap,
                r.flat_mean_auc
            );
        }
        out
    }

    pub fn write_audit_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for b in &self.batches {
            csv.serialize(b)?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Feeds `scorer` every graph year after its last observed year and before `t`.
fn catch_up(scorer: &mut dyn LinkScorer, graph: &TemporalGraph, t: Year) -> Result<()> {
    let from = scorer.observed_through().map_or(graph.horizon().start, |y| y + 1);
    if let Some(y) = scorer.observed_through().filter(|&y| y >= t) {
        return Err(Error::TemporalLeakage { found: y, query: t });
    }
    for y in from..t {
        scorer.observe(y, graph.events_in(y))?;
    }
    Ok(())
}

fn stream_id(regime_index: usize, batch: usize) -> u64 {
    ((regime_index as u64) << 48) | batch as u64
}

fn score_batch(
    scorer: &dyn LinkScorer,
    pools: &NegativePools,
    cfg: &EvalConfig,
    regime_index: usize,
    regime: NegativeRegime,
    batch: usize,
    events: &[EdgeEvent],
) -> Result<BatchResult> {
    let t = events[0].year;
    let mut rng = derive_rng(cfg.seed, stream_id(regime_index, batch));
    let mut pairs: Vec<(NodeId, NodeId)> = events.iter().map(|e| (e.u, e.v)).collect();
    let mut fallback = 0;
    for e in events {
        for d in pools.sample_negatives(e.u, e.v, t, regime, cfg.negatives_per_positive, &mut rng)? {
            fallback += d.fallback as usize;
            pairs.push((e.u, d.dst));
        }
    }
    let scores = scorer.score(t, &pairs, &mut rng)?;
    if scores.len() != pairs.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            got: scores.len(),
        });
    }
    let labelled: Vec<(f64, bool)> = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i < events.len()))
        .collect();
    Ok(BatchResult {
        year: t,
        regime,
        batch,
        positives: events.len(),
        negatives: pairs.len() - events.len(),
        fallback_negatives: fallback,
        ap: average_precision(&labelled)?,
        auc: auc_roc(&labelled)?,
    })
}

/// Runs the evaluation protocol over `stream`.
///
/// Positives are cut into batches of `batch_size` that never span two years.
/// Before the first batch of year `t` the scorer is fed every graph year it
/// has not yet seen that precedes `t`, so no scored input can depend on an
/// event at or after `t`. Each (regime, batch) draws from its own generator
/// stream, which makes results independent of scheduling.
pub fn evaluate(
    scorer: &mut dyn LinkScorer,
    graph: &TemporalGraph,
    stream: &[EdgeEvent],
    pools: &NegativePools,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if stream.is_empty() {
        return Err(Error::Empty("evaluation stream".into()));
    }
    if cfg.batch_size == 0 || cfg.negatives_per_positive == 0 || cfg.regimes.is_empty() {
        return Err(Error::invalid(
            "batch size, negatives per positive and regimes must be non-empty",
        ));
    }
    if stream.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("evaluation stream must be chronological"));
    }

    let mut batches = Vec::new();
    let mut next_batch = 0;
    let mut start = 0;
    while start < stream.len() {
        let t = stream[start].year;
        let end = start + stream[start..].partition_point(|e| e.year == t);
        catch_up(scorer, graph, t)?;
        let frozen: &dyn LinkScorer = scorer;
        let chunks: Vec<(usize, &[EdgeEvent])> = stream[start..end]
            .chunks(cfg.batch_size)
            .enumerate()
            .map(|(i, c)| (next_batch + i, c))
            .collect();
        next_batch += chunks.len();
        let jobs: Vec<(usize, NegativeRegime, usize, &[EdgeEvent])> = cfg
            .regimes
            .iter()
            .enumerate()
            .flat_map(|(ri, &r)| chunks.iter().map(move |&(b, c)| (ri, r, b, c)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(ri, r, b, c)| score_batch(frozen, pools, cfg, ri, r, b, c))
            .collect::<Result<Vec<_>>>()?;
        batches.extend(results);
        start = end;
    }

    let regimes = cfg
        .regimes
        .iter()
        .map(|&regime| {
            let mine: Vec<&BatchResult> = batches.iter().filter(|b| b.regime == regime).collect();
            let mut per_year: Vec<YearMetrics> = Vec::new();
            for b in &mine {
                if per_year.last().map_or(true, |y| y.year != b.year) {
                    let of_year: Vec<&&BatchResult> = mine.iter().filter(|x| x.year == b.year).collect();
                    per_year.push(YearMetrics {
                        year: b.year,
                        batches: of_year.len(),
                        mean_ap: mean(of_year.iter().map(|x| x.ap)),
                        mean_auc: mean(of_year.iter().map(|x| x.auc)),
                    });
                }
            }
            RegimeReport {
                regime,
                mean_ap: mean(per_year.iter().map(|y| y.mean_ap)),
                mean_auc: mean(per_year.iter().map(|y| y.mean_auc)),
                flat_mean_ap: mean(mine.iter().map(|b| b.ap)),
                flat_mean_auc: mean(mine.iter().map(|b| b.auc)),
                batches: mine.len(),
                fallback_negatives: mine.iter().map(|b| b.fallback_negatives).sum(),
                per_year,
            }
        })
        .collect();

    Ok(EvalReport {
        scorer: scorer.name(),
        aggregation: "mean_* average batches within a year, then years; flat_mean_* pool all batches".into(),
        config: cfg.clone(),
        regimes,
        batches,
    })
}

/// How `rank_emerging` enumerates unconnected pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy")]
pub enum CandidateStrategy {
    /// Every unconnected pair, in `(u, v)` order.
    AllPairs,
    /// Per source, only the `width` best-scoring unconnected partners survive.
    PerSourceBeam { width: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    pub top_k: usize,
    pub strategy: CandidateStrategy,
    /// Upper bound on scored candidates; enumeration stops once reached.
    pub max_candidates: usize,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            top_k: 100,
            strategy: CandidateStrategy::AllPairs,
            max_candidates: 5_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub rank: usize,
    pub u: NodeId,
    pub v: NodeId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergingRanking {
    pub year: Year,
    pub candidates: usize,
    /// The candidate budget cut the enumeration short.
    pub truncated: bool,
    pub pairs: Vec<RankedPair>,
}

impl EmergingRanking {
    /// CSV `rank,u,v,score` with field ids as `u` and `v`.
    pub fn write_csv<W: Write>(&self, graph: &TemporalGraph, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["rank", "u", "v", "score"])?;
        for p in &self.pairs {
            csv.write_record([
                p.rank.to_string(),
                graph.vertex_id(p.u).to_string(),
                graph.vertex_id(p.v).to_string(),
                p.score.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn by_rank(a: &(Pair, f64), b: &(Pair, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

const SCORE_CHUNK: usize = 4096;

/// Ranks pairs with no co-occurrence through year `t` by their score for `t + 1`.
pub fn rank_emerging(
    scorer: &mut dyn LinkScorer,
    graph: &TemporalGraph,
    t: Year,
    cfg: &RankConfig,
) -> Result<EmergingRanking> {
    if cfg.top_k == 0 {
        return Err(Error::invalid("top_k must be positive"));
    }
    if let CandidateStrategy::PerSourceBeam { width: 0 } = cfg.strategy {
        return Err(Error::invalid("beam width must be positive"));
    }
    let seen = graph.cumulative_adjacency(t)?;
    catch_up(scorer, graph, t + 1)?;
    let scorer: &dyn LinkScorer = scorer;

    let n = graph.vertex_count();
    let mut chunk_index = 0u64;
    let mut score_all = |pairs: &[Pair]| -> Result<Vec<(Pair, f64)>> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(SCORE_CHUNK) {
            let mut rng = derive_rng(cfg.seed, chunk_index);
            chunk_index += 1;
            let query: Vec<(NodeId, NodeId)> = chunk.iter().map(|p| (p.lo(), p.hi())).collect();
            let scores = scorer.score(t + 1, &query, &mut rng)?;
            if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
                return Err(Error::NonFinite(format!("candidate score {s}")));
            }
            out.extend(chunk.iter().copied().zip(scores));
        }
        Ok(out)
    };

    let mut kept: Vec<(Pair, f64)> = Vec::new();
    let mut candidates = 0usize;
    let mut truncated = false;
    'sources: for u in 0..n {
        let mut batch = Vec::new();
        for v in u + 1..n {
            let pair = Pair::new(NodeId::from(u), NodeId::from(v)).expect("u < v");
            if seen.contains_pair(&pair) {
                continue;
            }
            if candidates == cfg.max_candidates {
                truncated = true;
                break;
            }
            candidates += 1;
            batch.push(pair);
        }
        let mut scored = score_all(&batch)?;
        if let CandidateStrategy::PerSourceBeam { width } = cfg.strategy {
            scored.sort_by(by_rank);
            scored.truncate(width);
        }
        kept.extend(scored);
        if kept.len() > 4 * cfg.top_k.max(SCORE_CHUNK) {
            kept.sort_by(by_rank);
            kept.truncate(cfg.top_k);
        }
        if truncated {
            break 'sources;
        }
    }
    if truncated {
        log::warn!("candidate budget of {} reached; ranking is partial", cfg.max_candidates);
    }
    kept.sort_by(by_rank);
    kept.truncate(cfg.top_k);
    Ok(EmergingRanking {
        year: t,
        candidates,
        truncated,
        pairs: kept
            .into_iter()
            .enumerate()
            .map(|(i, (p, score))| RankedPair {
                rank: i + 1,
                u: p.lo(),
                v: p.hi(),
                score,
            })
            .collect(),
    })
}
