//! Dataset characterization: novelty, recurrence and surprise, the TEA/TET
//! appearance tables, and per-year node, edge, graph and temporal statistics.
//!
//! Every statistic is a function of the set of distinct pairs active in each
//! year, so reordering the input events changes nothing. Undefined ratios are
//! `None` (serialized as `null` or an empty CSV cell); no NaN is ever emitted.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{EdgeEvent, SplitManifest, TemporalGraph};
use crate::sampling::derive_rng;
use crate::types::{NodeId, Pair, Year};

fn pair_set(events: &[EdgeEvent]) -> HashSet<Pair> {
    events.iter().map(EdgeEvent::pair).collect()
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Mean over years after the first non-empty one of the share of that year's
/// edges seen for the first time. Years without edges are skipped.
pub fn novelty(g: &TemporalGraph) -> Result<f64> {
    let mut seen: HashSet<Pair> = HashSet::new();
    let mut shares = Vec::new();
    let mut first = true;
    for t in g.horizon().years() {
        let events = g.events_in(t);
        if events.is_empty() {
            continue;
        }
        let new = events.iter().filter(|e| !seen.contains(&e.pair())).count();
        if !first {
            shares.push(new as f64 / events.len() as f64);
        }
        first = false;
        seen.extend(events.iter().map(EdgeEvent::pair));
    }
    if shares.is_empty() {
        return Err(Error::invalid("novelty needs at least two years with edges"));
    }
    Ok(shares.iter().sum::<f64>() / shares.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceSurprise {
    /// `|E_train ∩ E_test| / |E_train|`.
    pub recurrence: f64,
    /// `|E_test \ E_train| / |E_test|`.
    pub surprise: f64,
    /// Alternative reading: `|E_train ∩ E_test| / |E_test|`.
    pub recurrence_test_denominator: f64,
}

pub fn recurrence_surprise(train: &[EdgeEvent], test: &[EdgeEvent]) -> Result<RecurrenceSurprise> {
    let (tr, te) = (pair_set(train), pair_set(test));
    if tr.is_empty() || te.is_empty() {
        return Err(Error::Empty("train or test edge set".into()));
    }
    let both = te.iter().filter(|p| tr.contains(p)).count();
    Ok(RecurrenceSurprise {
        recurrence: both as f64 / tr.len() as f64,
        surprise: (te.len() - both) as f64 / te.len() as f64,
        recurrence_test_denominator: both as f64 / te.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TeaRow {
    pub year: Year,
    pub new_edges: usize,
    pub repeated_edges: usize,
}

/// Per horizon year: edges appearing for the first time vs seen before.
pub fn tea_data(g: &TemporalGraph) -> Vec<TeaRow> {
    let mut seen: HashSet<Pair> = HashSet::new();
    g.horizon()
        .years()
        .map(|t| {
            let events = g.events_in(t);
            let new_edges = events.iter().filter(|e| !seen.contains(&e.pair())).count();
            seen.extend(events.iter().map(EdgeEvent::pair));
            TeaRow {
                year: t,
                new_edges,
                repeated_edges: events.len() - new_edges,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    /// Active somewhere in the train range.
    TrainSeen,
    /// Active in the test range and never in the train range.
    TestOnly,
    /// Neither of the above (e.g. validation-only or outside all splits).
    Other,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::TrainSeen => "train_seen",
            EdgeTag::TestOnly => "test_only",
            EdgeTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TetRow {
    pub u: NodeId,
    pub v: NodeId,
    pub first: Year,
    pub last: Year,
    /// Ascending years in which the edge is present.
    pub years: Vec<Year>,
    pub tag: EdgeTag,
}

/// Every edge ordered by `(first appearance, last appearance, u, v)`.
pub fn tet_data(g: &TemporalGraph, manifest: &SplitManifest) -> Result<Vec<TetRow>> {
    manifest.validate(Some(g.horizon()))?;
    let mut rows: Vec<TetRow> = g
        .pair_spans()
        .iter()
        .map(|(p, span)| {
            let in_train = span.years.iter().any(|&y| manifest.train.contains(y));
            let in_test = span.years.iter().any(|&y| manifest.test.contains(y));
            TetRow {
                u: p.lo(),
                v: p.hi(),
                first: span.first(),
                last: span.last(),
                years: span.years.clone(),
                tag: if in_train {
                    EdgeTag::TrainSeen
                } else if in_test {
                    EdgeTag::TestOnly
                } else {
                    EdgeTag::Other
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| (a.first, a.last, a.u, a.v).cmp(&(b.first, b.last, b.u, b.v)));
    Ok(rows)
}

/// Undirected snapshot restricted to its active nodes.
struct Snapshot {
    adj: HashMap<NodeId, Vec<NodeId>>,
    edges: usize,
}

impl Snapshot {
    fn new(events: &[EdgeEvent]) -> Self {
        let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for e in events {
            adj.entry(e.u).or_default().push(e.v);
            adj.entry(e.v).or_default().push(e.u);
        }
        for list in adj.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let edges = adj.values().map(Vec::len).sum::<usize>() / 2;
        Snapshot { adj, edges }
    }

    fn nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.adj.keys().copied().collect();
        v.sort_unstable();
        v
    }

    fn degree(&self, n: NodeId) -> usize {
        self.adj.get(&n).map_or(0, Vec::len)
    }

    fn local_clustering(&self, n: NodeId) -> Option<f64> {
        let nbrs = &self.adj[&n];
        let k = nbrs.len();
        if k < 2 {
            return None;
        }
        let mut links = 0usize;
        for (i, a) in nbrs.iter().enumerate() {
            let na = &self.adj[a];
            links += nbrs[i + 1..].iter().filter(|b| na.binary_search(b).is_ok()).count();
        }
        Some(2.0 * links as f64 / (k * (k - 1)) as f64)
    }

    fn bfs(&self, src: NodeId) -> HashMap<NodeId, u32> {
        let mut dist = HashMap::from([(src, 0u32)]);
        let mut queue = VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            let d = dist[&x];
            for &y in &self.adj[&x] {
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(y) {
                    slot.insert(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Connected components as sorted node lists, ordered by their smallest node.
    fn components(&self) -> Vec<Vec<NodeId>> {
        let mut done: HashSet<NodeId> = HashSet::new();
        let mut out = Vec::new();
        for n in self.nodes() {
            if done.contains(&n) {
                continue;
            }
            let mut comp: Vec<NodeId> = self.bfs(n).into_keys().collect();
            comp.sort_unstable();
            done.extend(comp.iter().copied());
            out.push(comp);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeYear {
    pub year: Year,
    pub active_nodes: usize,
    /// `2|E_t| / active nodes`.
    pub mean_degree: Option<f64>,
    /// `2|E_t| / |V|`.
    pub mean_degree_all: f64,
    /// Relative change in active nodes from the previous year.
    pub growth_rate: Option<f64>,
    /// Mean local clustering over active nodes, degree < 2 counting 0.
    pub clustering: Option<f64>,
    /// Mean local clustering over nodes of degree >= 2 only.
    pub clustering_deg2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeYear {
    pub year: Year,
    /// Distinct active pairs `|E_t|`.
    pub edge_count: usize,
    /// Sum of co-occurrence weights.
    pub weight_sum: u64,
    pub density: f64,
    /// Share of `E_t` seen in an earlier year.
    pub repetition_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSummary {
    pub u: NodeId,
    pub v: NodeId,
    pub first: Year,
    pub last: Year,
    pub frequency: usize,
    /// `last - first`.
    pub lifetime: i32,
    /// `last - first + 1`.
    pub lifetime_inclusive: i32,
    /// Mean gap between consecutive appearance years; `None` for single appearances.
    pub mean_inter_event: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphYear {
    pub year: Year,
    pub components: usize,
    pub largest_component: Option<usize>,
    pub diameter: Option<u32>,
    pub diameter_approximate: bool,
}

/// Churn ratio `|E_t \ E_{t-1}| / |E_{t-1} \ E_t|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Churn {
    Value(f64),
    /// New edges but none lost.
    Infinite,
    /// First year or no change at all.
    Undefined,
}

impl Churn {
    fn cell(self) -> String {
        match self {
            Churn::Value(x) => x.to_string(),
            Churn::Infinite => "inf".into(),
            Churn::Undefined => String::new(),
        }
    }
}

impl Serialize for Churn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Churn::Value(x) => s.serialize_f64(*x),
            Churn::Infinite => s.serialize_str("inf"),
            Churn::Undefined => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalYear {
    pub year: Year,
    pub new_edges: usize,
    pub lost_edges: usize,
    pub churn: Churn,
    /// Degree assortativity; `None` when endpoint degrees have zero variance.
    pub assortativity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    /// Above this many active nodes the diameter is estimated.
    pub exact_diameter_limit: usize,
    /// BFS sources sampled by the estimator (besides the double sweep).
    pub diameter_samples: usize,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            exact_diameter_limit: 5000,
            diameter_samples: 32,
            seed: 0,
        }
    }
}

fn node_year(g: &TemporalGraph, t: Year, snap: &Snapshot, prev_active: Option<usize>) -> NodeYear {
    let active = snap.adj.len();
    let nodes = snap.nodes();
    let local: Vec<Option<f64>> = nodes.iter().map(|&n| snap.local_clustering(n)).collect();
    let defined: Vec<f64> = local.iter().flatten().copied().collect();
    NodeYear {
        year: t,
        active_nodes: active,
        mean_degree: ratio(2 * snap.edges, active),
        mean_degree_all: if g.vertex_count() == 0 {
            0.0
        } else {
            2.0 * snap.edges as f64 / g.vertex_count() as f64
        },
        growth_rate: prev_active
            .filter(|&p| p > 0)
            .map(|p| (active as f64 - p as f64) / p as f64),
        clustering: (active > 0).then(|| defined.iter().sum::<f64>() / active as f64),
        clustering_deg2: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
    }
}

fn graph_year(t: Year, snap: &Snapshot, cfg: &DiagnosticsConfig) -> GraphYear {
    let comps = snap.components();
    let Some(largest) = comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))) else {
        return GraphYear {
            year: t,
            components: 0,
            largest_component: None,
            diameter: None,
            diameter_approximate: false,
        };
    };
    let ecc = |n: NodeId| {
        snap.bfs(n)
            .into_iter()
            .map(|(node, d)| (d, node))
            .max()
            .expect("source reached")
    };
    let (diameter, approximate) = if snap.adj.len() <= cfg.exact_diameter_limit {
        (largest.par_iter().map(|&n| ecc(n).0).max().unwrap_or(0), false)
    } else {
        let (_, far) = ecc(largest[0]);
        let (mut best, _) = ecc(far);
        let mut rng = derive_rng(cfg.seed, t as u64);
        let k = cfg.diameter_samples.min(largest.len());
        let sampled: Vec<NodeId> = index::sample(&mut rng, largest.len(), k)
            .into_iter()
            .map(|i| largest[i])
            .collect();
        best = best.max(sampled.par_iter().map(|&n| ecc(n).0).max().unwrap_or(0));
        (best, true)
    };
    GraphYear {
        year: t,
        components: comps.len(),
        largest_component: Some(largest.len()),
        diameter: Some(diameter),
        diameter_approximate: approximate,
    }
}

fn assortativity(snap: &Snapshot) -> Option<f64> {
    // integer moments over both orientations; x and y share the same marginal
    let (mut m, mut s1, mut s2, mut sxy) = (0u128, 0u128, 0u128, 0u128);
    for (&a, nbrs) in &snap.adj {
        let da = snap.degree(a) as u128;
        for &b in nbrs {
            m += 1;
            s1 += da;
            s2 += da * da;
            sxy += da * snap.degree(b) as u128;
        }
    }
    let var = (m * s2).checked_sub(s1 * s1)?;
    if m == 0 || var == 0 {
        return None;
    }
    let cov = (m * sxy) as i128 - (s1 * s1) as i128;
    Some(cov as f64 / var as f64)
}

fn temporal_year(t: Year, cur: &[EdgeEvent], prev: Option<&[EdgeEvent]>, snap: &Snapshot) -> TemporalYear {
    let assort = assortativity(snap);
    let Some(prev) = prev else {
        return TemporalYear {
            year: t,
            new_edges: cur.len(),
            lost_edges: 0,
            churn: Churn::Undefined,
            assortativity: assort,
        };
    };
    let (a, b) = (pair_set(cur), pair_set(prev));
    let new = a.difference(&b).count();
    let lost = b.difference(&a).count();
    TemporalYear {
        year: t,
        new_edges: new,
        lost_edges: lost,
        churn: match (new, lost) {
            (0, 0) => Churn::Undefined,
            (_, 0) => Churn::Infinite,
            (n, l) => Churn::Value(n as f64 / l as f64),
        },
        assortativity: assort,
    }
}

/// Scalar summary of the whole stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub vertices: usize,
    pub active_vertices: usize,
    pub events: usize,
    pub distinct_edges: usize,
    pub total_weight: u64,
    pub novelty: Option<f64>,
    pub recurrence: Option<f64>,
    pub surprise: Option<f64>,
    pub recurrence_test_denominator: Option<f64>,
    pub mean_growth_rate: Option<f64>,
    pub mean_inter_event: Option<f64>,
    pub mean_lifetime_inclusive: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub summary: DiagnosticsSummary,
    pub tea: Vec<TeaRow>,
    pub nodes: Vec<NodeYear>,
    pub edges: Vec<EdgeYear>,
    pub graph: Vec<GraphYear>,
    pub temporal: Vec<TemporalYear>,
    #[serde(skip)]
    pub edge_table: Vec<EdgeSummary>,
    #[serde(skip)]
    pub tet: Vec<TetRow>,
    /// Node persistence span (`last - first + 1` active years) to node count.
    pub persistence_histogram: BTreeMap<i32, usize>,
    /// Year of last activity to node count.
    pub last_activity_histogram: BTreeMap<Year, usize>,
    /// Years present to edge count.
    pub frequency_histogram: BTreeMap<usize, usize>,
    /// `last - first + 1` to edge count.
    pub lifetime_histogram: BTreeMap<i32, usize>,
    /// Last appearance year to edge count.
    pub last_appearance_histogram: BTreeMap<Year, usize>,
}

fn mean_of(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Edge lifecycle table in canonical pair order.
pub fn edge_table(g: &TemporalGraph) -> Vec<EdgeSummary> {
    let mut rows: Vec<EdgeSummary> = g
        .pair_spans()
        .iter()
        .map(|(p, s)| {
            let gaps: Vec<f64> = s.years.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
            EdgeSummary {
                u: p.lo(),
                v: p.hi(),
                first: s.first(),
                last: s.last(),
                frequency: s.years.len(),
                lifetime: s.last() - s.first(),
                lifetime_inclusive: s.last() - s.first() + 1,
                mean_inter_event: mean_of(&gaps),
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.u, r.v));
    rows
}

/// Computes every diagnostic. Fails on a graph without events.
pub fn diagnose(g: &TemporalGraph, manifest: &SplitManifest, cfg: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    if g.events().is_empty() {
        return Err(Error::Empty("graph has no events".into()));
    }
    let streams = g.split(manifest)?;
    let years: Vec<Year> = g.horizon().years().collect();
    let snaps: Vec<Snapshot> = years.par_iter().map(|&t| Snapshot::new(g.events_in(t))).collect();

    let mut nodes = Vec::with_capacity(years.len());
    for (i, &t) in years.iter().enumerate() {
        let prev = (i > 0).then(|| snaps[i - 1].adj.len());
        nodes.push(node_year(g, t, &snaps[i], prev));
    }
    let graph: Vec<GraphYear> = years
        .par_iter()
        .zip(&snaps)
        .map(|(&t, s)| graph_year(t, s, cfg))
        .collect();
    let temporal: Vec<TemporalYear> = years
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let prev = (i > 0).then(|| g.events_in(years[i - 1]));
            temporal_year(t, g.events_in(t), prev, &snaps[i])
        })
        .collect();

    let tea = tea_data(g);
    let n = g.vertex_count();
    let max_pairs = n * n.saturating_sub(1) / 2;
    let edges: Vec<EdgeYear> = tea
        .iter()
        .map(|row| {
            let ev = g.events_in(row.year);
            EdgeYear {
                year: row.year,
                edge_count: ev.len(),
                weight_sum: ev.iter().map(|e| e.weight as u64).sum(),
                density: ratio(ev.len(), max_pairs).unwrap_or(0.0),
                repetition_rate: ratio(row.repeated_edges, ev.len()),
            }
        })
        .collect();

    let table = edge_table(g);
    let mut frequency_histogram = BTreeMap::new();
    let mut lifetime_histogram = BTreeMap::new();
    let mut last_appearance_histogram = BTreeMap::new();
    for e in &table {
        *frequency_histogram.entry(e.frequency).or_insert(0) += 1;
        *lifetime_histogram.entry(e.lifetime_inclusive).or_insert(0) += 1;
        *last_appearance_histogram.entry(e.last).or_insert(0) += 1;
    }
    let mut activity: HashMap<NodeId, (Year, Year)> = HashMap::new();
    for e in g.events() {
        for x in [e.u, e.v] {
            let slot = activity.entry(x).or_insert((e.year, e.year));
            slot.0 = slot.0.min(e.year);
            slot.1 = slot.1.max(e.year);
        }
    }
    let mut persistence_histogram = BTreeMap::new();
    let mut last_activity_histogram = BTreeMap::new();
    for &(first, last) in activity.values() {
        *persistence_histogram.entry(last - first + 1).or_insert(0) += 1;
        *last_activity_histogram.entry(last).or_insert(0) += 1;
    }

    let rs = recurrence_surprise(streams.train, streams.test).ok();
    let growth: Vec<f64> = nodes.iter().filter_map(|y| y.growth_rate).collect();
    let inter: Vec<f64> = table.iter().filter_map(|e| e.mean_inter_event).collect();
    let lifetimes: Vec<f64> = table.iter().map(|e| e.lifetime_inclusive as f64).collect();
    let summary = DiagnosticsSummary {
        vertices: n,
        active_vertices: activity.len(),
        events: g.events().len(),
        distinct_edges: table.len(),
        total_weight: g.total_weight(),
        novelty: novelty(g).ok(),
        recurrence: rs.map(|r| r.recurrence),
        surprise: rs.map(|r| r.surprise),
        recurrence_test_denominator: rs.map(|r| r.recurrence_test_denominator),
        mean_growth_rate: mean_of(&growth),
        mean_inter_event: mean_of(&inter),
        mean_lifetime_inclusive: mean_of(&lifetimes),
    };

    Ok(DiagnosticsReport {
        summary,
        tea,
        nodes,
        edges,
        graph,
        temporal,
        tet: tet_data(g, manifest)?,
        edge_table: table,
        persistence_histogram,
        last_activity_histogram,
        frequency_histogram,
        lifetime_histogram,
        last_appearance_histogram,
    })
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl DiagnosticsReport {
    /// Plot-ready CSV tables as `(file name, contents)`. Node ids are rendered
    /// through `g`'s vertex ids.
    pub fn csv_tables(&self, g: &TemporalGraph) -> Vec<(&'static str, String)> {
        let id = |n: NodeId| crate::features::escape_key(g.vertex_id(n)).replace(',', "\\,");
        let mut out = Vec::new();

        let mut s = String::from("year,new_edges,repeated_edges\n");
        for r in &self.tea {
            let _ = writeln!(s, "{},{},{}", r.year, r.new_edges, r.repeated_edges);
        }
        out.push(("tea.csv", s));

        let mut order = String::from("edge,u,v,first,last,frequency,tag\n");
        let mut presence = String::from("edge,year,tag\n");
        for (i, r) in self.tet.iter().enumerate() {
            let _ = writeln!(
                order,
                "{i},{},{},{},{},{},{}",
                id(r.u),
                id(r.v),
                r.first,
                r.last,
                r.years.len(),
                r.tag.as_str()
            );
            for y in &r.years {
                let _ = writeln!(presence, "{i},{y},{}", r.tag.as_str());
            }
        }
        out.push(("tet_order.csv", order));
        out.push(("tet_presence.csv", presence));

        let mut s =
            String::from("year,active_nodes,mean_degree,mean_degree_all,growth_rate,clustering,clustering_deg2\n");
        for r in &self.nodes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.year,
                r.active_nodes,
                cell(r.mean_degree),
                r.mean_degree_all,
                cell(r.growth_rate),
                cell(r.clustering),
                cell(r.clustering_deg2)
            );
        }
        out.push(("node_stats.csv", s));

        let mut s = String::from("year,edge_count,weight_sum,density,repetition_rate\n");
        for r in &self.edges {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.year,
                r.edge_count,
                r.weight_sum,
                r.density,
                cell(r.repetition_rate)
            );
        }
        out.push(("edge_stats.csv", s));

        let mut s = String::from("u,v,first,last,frequency,lifetime,lifetime_inclusive,mean_inter_event\n");
        for r in &self.edge_table {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                id(r.u),
                id(r.v),
                r.first,
                r.last,
                r.frequency,
                r.lifetime,
                r.lifetime_inclusive,
                cell(r.mean_inter_event)
            );
        }
        out.push(("edge_table.csv", s));

        let mut s = String::from("year,components,largest_component,diameter,diameter_approximate\n");
        for r in &self.graph {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.year,
                r.components,
                r.largest_component.map(|x| x.to_string()).unwrap_or_default(),
                r.diameter.map(|x| x.to_string()).unwrap_or_default(),
                r.diameter_approximate
            );
        }
        out.push(("graph_stats.csv", s));

        let mut s = String::from("year,new_edges,lost_edges,churn,assortativity\n");
        for r in &self.temporal {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.year,
                r.new_edges,
                r.lost_edges,
                r.churn.cell(),
                cell(r.assortativity)
            );
        }
        out.push(("temporal_stats.csv", s));

        let mut s = String::from("family,bin,count\n");
        let families: [(&str, Vec<(String, usize)>); 5] = [
            ("node_persistence", hist(&self.persistence_histogram)),
            ("node_last_activity", hist(&self.last_activity_histogram)),
            ("edge_frequency", hist(&self.frequency_histogram)),
            ("edge_lifetime", hist(&self.lifetime_histogram)),
            ("edge_last_appearance", hist(&self.last_appearance_histogram)),
        ];
        for (family, rows) in families {
            for (bin, count) in rows {
                let _ = writeln!(s, "{family},{bin},{count}");
            }
        }
        out.push(("histograms.csv", s));
        out
    }
}

fn hist<K: ToString>(h: &BTreeMap<K, usize>) -> Vec<(String, usize)> {
    h.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
