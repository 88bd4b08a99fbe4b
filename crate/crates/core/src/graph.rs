//! Yearly co-occurrence graph over a fixed vertex set.
//!
//! The graph is stored as one chronologically sorted event list with a
//! per-year offset index. Binary and cumulative adjacency are computed on
//! demand rather than materialized as matrices.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ConceptCatalog, WorkRecord};
use crate::types::{FirstSeen, NodeId, Pair, Year, YearRange};

/// Aggregated co-occurrence of a pair in one year. `u < v` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeEvent {
    pub year: Year,
    pub u: NodeId,
    pub v: NodeId,
    pub weight: u32,
}

impl EdgeEvent {
    #[inline]
    pub fn pair(&self) -> Pair {
        Pair::new(self.u, self.v).expect("events never hold self-pairs")
    }
}

/// Appearance summary of one pair across the whole stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSpan {
    /// Ascending, distinct years in which the pair was active.
    pub years: Vec<Year>,
}

impl PairSpan {
    pub fn first(&self) -> Year {
        self.years[0]
    }

    pub fn last(&self) -> Year {
        *self.years.last().expect("spans are never empty")
    }
}

#[derive(Debug)]
pub struct TemporalGraph {
    vertices: Vec<String>,
    index: HashMap<String, NodeId>,
    horizon: YearRange,
    events: Vec<EdgeEvent>,
    /// `year_offsets[i]..year_offsets[i + 1]` are the events of `horizon.start + i`.
    year_offsets: Vec<usize>,
    spans: OnceLock<HashMap<Pair, PairSpan>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Skip pairs where one field is an ancestor of the other.
    pub drop_ancestor_pairs: bool,
}

/// Incremental builder so works can be streamed without being held in memory.
pub struct GraphBuilder<'c> {
    catalog: &'c ConceptCatalog,
    horizon: YearRange,
    opts: BuildOptions,
    vertices: Vec<String>,
    index: HashMap<String, NodeId>,
    counts: HashMap<(Year, NodeId, NodeId), u32>,
    papers: usize,
}

impl<'c> GraphBuilder<'c> {
    pub fn new(catalog: &'c ConceptCatalog, horizon: YearRange, opts: BuildOptions) -> Self {
        let vertices: Vec<String> = catalog.ids().map(str::to_string).collect();
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), NodeId::from(i)))
            .collect();
        GraphBuilder {
            catalog,
            horizon,
            opts,
            vertices,
            index,
            counts: HashMap::new(),
            papers: 0,
        }
    }

    /// Adds every unordered pair of the work's fields at the work's year.
    /// Works outside the horizon and fields outside the catalog are ignored.
    pub fn add_work(&mut self, work: &WorkRecord) {
        if !self.horizon.contains(work.year) {
            return;
        }
        let mut ids: Vec<(NodeId, &str)> = work
            .field_ids
            .iter()
            .filter_map(|f| self.index.get(f).map(|&n| (n, f.as_str())))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return;
        }
        self.papers += 1;
        for (i, &(a, fa)) in ids.iter().enumerate() {
            for &(b, fb) in &ids[i + 1..] {
                if self.opts.drop_ancestor_pairs
                    && (self.catalog.is_ancestor(fa, fb) || self.catalog.is_ancestor(fb, fa))
                {
                    continue;
                }
                *self.counts.entry((work.year, a, b)).or_insert(0) += 1;
            }
        }
    }

    pub fn papers(&self) -> usize {
        self.papers
    }

    pub fn finish(self) -> TemporalGraph {
        let events = self
            .counts
            .into_iter()
            .map(|((year, u, v), weight)| EdgeEvent { year, u, v, weight })
            .collect();
        TemporalGraph::assemble(self.vertices, self.index, self.horizon, events)
    }
}

impl TemporalGraph {
    /// Builds the graph from a corpus. The vertex set is every catalog field.
    pub fn build(
        works: &[WorkRecord],
        catalog: &ConceptCatalog,
        horizon: YearRange,
        opts: BuildOptions,
    ) -> TemporalGraph {
        let mut builder = GraphBuilder::new(catalog, horizon, opts);
        for w in works {
            builder.add_work(w);
        }
        builder.finish()
    }

    /// Builds a graph from explicit events over `vertices` (taken in the given
    /// order, which must be strictly increasing).
    pub fn from_events(vertices: Vec<String>, horizon: YearRange, events: Vec<EdgeEvent>) -> Result<TemporalGraph> {
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("vertex ids must be unique and sorted"));
        }
        let n = vertices.len();
        let mut seen = HashSet::with_capacity(events.len());
        for e in &events {
            if e.u >= e.v {
                return Err(Error::invalid(format!(
                    "event ({}, {}) not in canonical order",
                    e.u, e.v
                )));
            }
            if e.v.index() >= n {
                return Err(Error::invalid(format!("event references vertex {} of {n}", e.v)));
            }
            if e.weight == 0 {
                return Err(Error::invalid("event weight must be positive"));
            }
            if !horizon.contains(e.year) {
                return Err(Error::OutOfHorizon {
                    year: e.year,
                    start: horizon.start,
                    end: horizon.end,
                });
            }
            if !seen.insert((e.year, e.u, e.v)) {
                return Err(Error::invalid(format!(
                    "duplicate event ({}, {}, {})",
                    e.u, e.v, e.year
                )));
            }
        }
        let index = vertices
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), NodeId::from(i)))
            .collect();
        Ok(TemporalGraph::assemble(vertices, index, horizon, events))
    }

    fn assemble(
        vertices: Vec<String>,
        index: HashMap<String, NodeId>,
        horizon: YearRange,
        mut events: Vec<EdgeEvent>,
    ) -> TemporalGraph {
        events.sort_unstable();
        let mut year_offsets = Vec::with_capacity(horizon.len() + 1);
        let mut pos = 0;
        for year in horizon.years() {
            year_offsets.push(pos);
            pos += events[pos..].partition_point(|e| e.year == year);
        }
        year_offsets.push(events.len());
        TemporalGraph {
            vertices,
            index,
            horizon,
            events,
            year_offsets,
            spans: OnceLock::new(),
        }
    }

    pub fn horizon(&self) -> YearRange {
        self.horizon
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_id(&self, id: NodeId) -> &str {
        &self.vertices[id.index()]
    }

    pub fn node(&self, field_id: &str) -> Option<NodeId> {
        self.index.get(field_id).copied()
    }

    /// All events, sorted by `(year, u, v)`.
    pub fn events(&self) -> &[EdgeEvent] {
        &self.events
    }

    /// Sum of weights: paper-level pair multiplicities.
    pub fn total_weight(&self) -> u64 {
        self.events.iter().map(|e| e.weight as u64).sum()
    }

    fn check_year(&self, t: Year) -> Result<usize> {
        if !self.horizon.contains(t) {
            return Err(Error::OutOfHorizon {
                year: t,
                start: self.horizon.start,
                end: self.horizon.end,
            });
        }
        Ok((t - self.horizon.start) as usize)
    }

    /// Events of year `t`; empty outside the horizon.
    pub fn events_in(&self, t: Year) -> &[EdgeEvent] {
        match self.check_year(t) {
            Ok(i) => &self.events[self.year_offsets[i]..self.year_offsets[i + 1]],
            Err(_) => &[],
        }
    }

    /// Events of every year inside `range` (clipped to the horizon).
    pub fn events_between(&self, range: YearRange) -> &[EdgeEvent] {
        let lo = self.events.partition_point(|e| e.year < range.start);
        let hi = self.events.partition_point(|e| e.year <= range.end);
        &self.events[lo..hi.max(lo)]
    }

    /// Events with `year < t`.
    pub fn events_before(&self, t: Year) -> &[EdgeEvent] {
        &self.events[..self.events.partition_point(|e| e.year < t)]
    }

    /// Co-occurrence count `w_t(u, v)`.
    pub fn weight(&self, u: NodeId, v: NodeId, t: Year) -> u32 {
        let Some(p) = Pair::new(u, v) else { return 0 };
        let slice = self.events_in(t);
        slice
            .binary_search_by(|e| (e.u, e.v).cmp(&(p.lo(), p.hi())))
            .map(|i| slice[i].weight)
            .unwrap_or(0)
    }

    /// `A_t`: pairs with positive weight in year `t`.
    pub fn binary_adjacency(&self, t: Year) -> Result<Adjacency> {
        self.check_year(t)?;
        Ok(Adjacency::from_events(self.vertex_count(), self.events_in(t)))
    }

    /// `A_{<=t}`: pairs active in any year up to and including `t`.
    pub fn cumulative_adjacency(&self, t: Year) -> Result<Adjacency> {
        self.check_year(t)?;
        Ok(Adjacency::from_events(
            self.vertex_count(),
            &self.events[..self.events.partition_point(|e| e.year <= t)],
        ))
    }

    /// Per-pair appearance years, computed once and cached.
    pub fn pair_spans(&self) -> &HashMap<Pair, PairSpan> {
        self.spans.get_or_init(|| {
            let mut spans: HashMap<Pair, PairSpan> = HashMap::new();
            for e in &self.events {
                spans
                    .entry(e.pair())
                    .or_insert_with(|| PairSpan { years: Vec::new() })
                    .years
                    .push(e.year);
            }
            spans
        })
    }

    /// First-observation time `tau(u, v)`.
    pub fn first_observation(&self, u: NodeId, v: NodeId) -> Result<FirstSeen> {
        if u.index() >= self.vertex_count() || v.index() >= self.vertex_count() {
            return Err(Error::invalid("vertex out of range"));
        }
        let pair = Pair::new(u, v).ok_or_else(|| Error::invalid("first observation of a self-pair"))?;
        Ok(self
            .pair_spans()
            .get(&pair)
            .map(|s| FirstSeen::At(s.first()))
            .unwrap_or(FirstSeen::Never))
    }

    /// Partitions the stream by the manifest's year ranges.
    pub fn split(&self, manifest: &SplitManifest) -> Result<SplitStreams<'_>> {
        manifest.validate(Some(self.horizon))?;
        Ok(SplitStreams {
            train: self.events_between(manifest.train),
            val: manifest.val.map(|r| self.events_between(r)).unwrap_or(&[]),
            test: self.events_between(manifest.test),
        })
    }

    /// Writes the `u,v,year,weight` edge stream, sorted by `(year, u, v)`.
    pub fn write_edge_csv<W: Write>(&self, w: W) -> Result<()> {
        write_events_csv(self, &self.events, w)
    }

    /// Reads an edge stream written by [`TemporalGraph::write_edge_csv`].
    /// Lines starting with `#` are metadata and ignored.
    pub fn read_edge_csv<R: Read>(r: R, vertices: Vec<String>, horizon: YearRange) -> Result<TemporalGraph> {
        let index: HashMap<&str, NodeId> = vertices
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), NodeId::from(i)))
            .collect();
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["u", "v", "year", "weight"] {
            return Err(Error::parse("edges", 1, "expected header `u,v,year,weight`"));
        }
        let mut events = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let node = |s: &str| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::parse("edges", line, format!("unknown vertex `{s}`")))
            };
            let num = |s: &str, what: &str| -> Result<i64> {
                s.parse()
                    .map_err(|_| Error::parse("edges", line, format!("bad {what} `{s}`")))
            };
            let (a, b) = (node(&rec[0])?, node(&rec[1])?);
            let pair = Pair::new(a, b).ok_or_else(|| Error::parse("edges", line, "self-pair"))?;
            let year = num(&rec[2], "year")? as Year;
            let weight = u32::try_from(num(&rec[3], "weight")?)
                .map_err(|_| Error::parse("edges", line, "weight out of range"))?;
            events.push(EdgeEvent {
                year,
                u: pair.lo(),
                v: pair.hi(),
                weight,
            });
        }
        TemporalGraph::from_events(vertices, horizon, events)
    }
}

/// Writes an arbitrary event slice of `g` in edge-stream CSV form.
pub fn write_events_csv<W: Write>(g: &TemporalGraph, events: &[EdgeEvent], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["u", "v", "year", "weight"])?;
    for e in events {
        out.write_record([
            g.vertex_id(e.u),
            g.vertex_id(e.v),
            &e.year.to_string(),
            &e.weight.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Symmetric 0/1 relation on the vertex set with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    pairs: HashSet<Pair>,
}

impl Adjacency {
    fn from_events(n: usize, events: &[EdgeEvent]) -> Self {
        Adjacency {
            n,
            pairs: events.iter().map(EdgeEvent::pair).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> bool {
        Pair::new(a, b).is_some_and(|p| self.pairs.contains(&p))
    }

    pub fn edge_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn contains_pair(&self, p: &Pair) -> bool {
        self.pairs.contains(p)
    }

    /// Edges in canonical sorted order.
    pub fn sorted_pairs(&self) -> Vec<Pair> {
        let mut v: Vec<_> = self.pairs.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Chronological train / validation / test year ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: YearRange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val: Option<YearRange>,
    pub test: YearRange,
}

impl SplitManifest {
    /// Train 2002-2017, validation 2018-2021, test 2022-2024.
    pub fn canonical() -> Self {
        SplitManifest {
            train: YearRange { start: 2002, end: 2017 },
            val: Some(YearRange { start: 2018, end: 2021 }),
            test: YearRange { start: 2022, end: 2024 },
        }
    }

    pub fn validate(&self, horizon: Option<YearRange>) -> Result<()> {
        let ranges: Vec<(&str, YearRange)> = [
            ("train", Some(self.train)),
            ("val", self.val),
            ("test", Some(self.test)),
        ]
        .into_iter()
        .filter_map(|(n, r)| r.map(|r| (n, r)))
        .collect();
        for (i, (na, a)) in ranges.iter().enumerate() {
            for (nb, b) in &ranges[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidManifest(format!("{na} {a} overlaps {nb} {b}")));
                }
                if a.end >= b.start {
                    return Err(Error::InvalidManifest(format!("{na} {a} must precede {nb} {b}")));
                }
            }
            if let Some(h) = horizon {
                if !h.contains_range(&ranges[i].1) {
                    return Err(Error::InvalidManifest(format!("{na} {a} outside horizon {h}")));
                }
            }
        }
        Ok(())
    }

    /// Smallest range covering all splits.
    pub fn covered(&self) -> YearRange {
        YearRange {
            start: self.train.start,
            end: self.test.end,
        }
    }
}

/// Chronologically ordered event slices per split.
#[derive(Debug, Clone, Copy)]
pub struct SplitStreams<'g> {
    pub train: &'g [EdgeEvent],
    pub val: &'g [EdgeEvent],
    pub test: &'g [EdgeEvent],
}
