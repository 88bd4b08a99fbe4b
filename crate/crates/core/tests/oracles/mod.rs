//! Independent reference implementations and synthetic data generators
//! shared by the integration tests and the acceptance suite. Everything here
//! is written for clarity over speed and avoids the library's own helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use fosbench_core::graph::EdgeEvent;
use fosbench_core::{NodeId, Year};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- corpora

pub struct Corpus {
    pub concepts_jsonl: String,
    pub works_jsonl: String,
    /// Direct parents of every concept.
    pub parents: BTreeMap<String, Vec<String>>,
    /// `(year, raw tags)` for every work line, including unknown tags.
    pub works: Vec<(Year, Vec<String>)>,
}

/// Random taxonomy of up to 25 concepts over four levels and `papers` works
/// spread over 1999..=2011 (partly outside a 2001..=2009 horizon).
pub fn random_corpus(seed: u64, papers: usize) -> Corpus {
    let mut r = rng(seed);
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); 4];
    let mut parents = BTreeMap::new();
    let mut concepts = String::new();
    let n = r.gen_range(8..=25);
    for i in 0..n {
        let level = if i < 2 { 0 } else { r.gen_range(1..4usize) };
        let level = (0..=level)
            .rev()
            .find(|&l| l == 0 || !levels[l - 1].is_empty())
            .unwrap();
        let id = format!("C{i:02}");
        let mut ps: Vec<String> = Vec::new();
        if level > 0 {
            let k = r.gen_range(1..=2);
            for _ in 0..k {
                let l = r.gen_range(0..level);
                if let Some(p) = levels[l].choose(&mut r) {
                    if !ps.contains(p) {
                        ps.push(p.clone());
                    }
                }
            }
            if ps.is_empty() {
                ps.push(levels[level - 1][0].clone());
            }
        }
        concepts.push_str(&format!(
            "{{\"id\":\"{id}\",\"display_name\":\"Name {i}\",\"level\":{level},\"ancestors\":{:?}}}\n",
            ps
        ));
        parents.insert(id.clone(), ps);
        levels[level].push(id);
    }
    let ids: Vec<String> = parents.keys().cloned().collect();
    let mut works = Vec::new();
    let mut works_jsonl = String::new();
    for w in 0..papers {
        let year = r.gen_range(1999..=2011);
        let k = r.gen_range(1..=4);
        let mut tags: Vec<String> = (0..k)
            .map(|_| {
                if r.gen_bool(0.05) {
                    "UNKNOWN".to_string()
                } else {
                    ids.choose(&mut r).unwrap().clone()
                }
            })
            .collect();
        tags.dedup();
        works_jsonl.push_str(&format!(
            "{{\"id\":\"W{w}\",\"publication_year\":{year},\"concepts\":{:?}}}\n",
            tags
        ));
        works.push((year, tags));
    }
    Corpus {
        concepts_jsonl: concepts,
        works_jsonl,
        parents,
        works,
    }
}

/// Tag closure by breadth-first search over parent links.
pub fn closure_bfs(parents: &BTreeMap<String, Vec<String>>, tags: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut queue: VecDeque<String> = tags.iter().filter(|t| parents.contains_key(*t)).cloned().collect();
    while let Some(t) = queue.pop_front() {
        if out.insert(t.clone()) {
            queue.extend(parents[&t].iter().cloned());
        }
    }
    out
}

/// `w_t(a, b)` by nested loops over papers, keyed by field ids with `a < b`.
pub fn pair_counts(
    corpus: &Corpus,
    start: Year,
    end: Year,
    drop_ancestor_pairs: bool,
) -> HashMap<(Year, String, String), u32> {
    let mut counts = HashMap::new();
    for (year, tags) in &corpus.works {
        if *year < start || *year > end {
            continue;
        }
        let closed: Vec<String> = closure_bfs(&corpus.parents, tags).into_iter().collect();
        for i in 0..closed.len() {
            for j in i + 1..closed.len() {
                let (a, b) = (&closed[i], &closed[j]);
                if drop_ancestor_pairs {
                    let anc_a = closure_bfs(&corpus.parents, &[a.clone()]);
                    let anc_b = closure_bfs(&corpus.parents, &[b.clone()]);
                    if anc_a.contains(b) || anc_b.contains(a) {
                        continue;
                    }
                }
                *counts.entry((*year, a.clone(), b.clone())).or_insert(0) += 1;
            }
        }
    }
    counts
}

// ---------------------------------------------------------------- streams

/// Random yearly edge stream on `n` nodes: a pool of candidate pairs, each
/// active in a year with a per-year probability, giving a mix of new and
/// repeated edges. Events are returned in a shuffled order.
pub fn random_stream(seed: u64, n: u32, years: std::ops::RangeInclusive<Year>, pool: usize) -> Vec<EdgeEvent> {
    let mut r = rng(seed);
    let mut pairs = BTreeSet::new();
    while pairs.len() < pool.min((n * (n - 1) / 2) as usize) {
        let a = r.gen_range(0..n);
        let b = r.gen_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let pairs: Vec<(u32, u32)> = pairs.into_iter().collect();
    let mut out = Vec::new();
    for year in years {
        let p = r.gen_range(0.05..0.6);
        for &(a, b) in &pairs {
            if r.gen_bool(p) {
                out.push(EdgeEvent {
                    year,
                    u: NodeId(a),
                    v: NodeId(b),
                    weight: r.gen_range(1..5),
                });
            }
        }
    }
    out.shuffle(&mut r);
    out
}

pub fn vertex_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i:04}")).collect()
}

// ---------------------------------------------------------------- metrics

/// Threshold-sum AP recomputing precision and recall from scratch at every
/// distinct score.
pub fn ap_oracle(scores: &[(f64, bool)]) -> f64 {
    let mut thresholds: Vec<f64> = scores.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let npos = scores.iter().filter(|s| s.1).count() as f64;
    let mut prev_r = 0.0;
    let mut ap = 0.0;
    for th in thresholds {
        let tp = scores.iter().filter(|s| s.0 >= th && s.1).count() as f64;
        let fp = scores.iter().filter(|s| s.0 >= th && !s.1).count() as f64;
        let r = tp / npos;
        ap += (r - prev_r) * (tp / (tp + fp));
        prev_r = r;
    }
    ap
}

/// Pairwise-comparison AUC.
pub fn auc_oracle(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Random batch of at most `max_len` scores with both labels present, drawn
/// from a small value set so ties are common.
pub fn random_batch<R: Rng>(r: &mut R, max_len: usize) -> Vec<(f64, bool)> {
    let len = r.gen_range(2..=max_len);
    let levels = r.gen_range(1..=8);
    let mut b: Vec<(f64, bool)> = (0..len)
        .map(|_| (r.gen_range(0..levels) as f64 / levels as f64, r.gen_bool(0.5)))
        .collect();
    b[0].1 = true;
    b[1].1 = false;
    b.shuffle(r);
    b
}

// ---------------------------------------------------------------- edgebank

/// Linear-scan memorization: 1 if the pair occurs before `t` (and, with a
/// window, no earlier than `t - window`).
pub fn edgebank_oracle(events: &[EdgeEvent], u: NodeId, v: NodeId, t: Year, window: Option<u32>) -> f64 {
    let (a, b) = (u.min(v), u.max(v));
    let hit = events
        .iter()
        .any(|e| e.u == a && e.v == b && e.year < t && window.map_or(true, |w| e.year >= t - w as Year));
    if hit {
        1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------- diagnostics

/// Dense yearly adjacency matrices.
pub struct DenseStream {
    pub n: usize,
    pub years: Vec<Year>,
    pub adj: Vec<Vec<Vec<bool>>>,
}

impl DenseStream {
    pub fn new(n: usize, years: std::ops::RangeInclusive<Year>, events: &[EdgeEvent]) -> Self {
        let years: Vec<Year> = years.collect();
        let mut adj = vec![vec![vec![false; n]; n]; years.len()];
        for e in events {
            let i = (e.year - years[0]) as usize;
            adj[i][e.u.index()][e.v.index()] = true;
            adj[i][e.v.index()][e.u.index()] = true;
        }
        DenseStream { n, years, adj }
    }

    pub fn edges(&self, yi: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.adj[yi][a][b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn degree(&self, yi: usize, a: usize) -> usize {
        self.adj[yi][a].iter().filter(|x| **x).count()
    }

    pub fn seen_before(&self, yi: usize, a: usize, b: usize) -> bool {
        (0..yi).any(|j| self.adj[j][a][b])
    }

    pub fn active(&self, yi: usize) -> Vec<usize> {
        (0..self.n).filter(|&a| self.degree(yi, a) > 0).collect()
    }

    pub fn novelty(&self) -> Option<f64> {
        let mut shares = Vec::new();
        let mut first = true;
        for yi in 0..self.years.len() {
            let e = self.edges(yi);
            if e.is_empty() {
                continue;
            }
            if !first {
                let new = e.iter().filter(|&&(a, b)| !self.seen_before(yi, a, b)).count();
                shares.push(new as f64 / e.len() as f64);
            }
            first = false;
        }
        (!shares.is_empty()).then(|| shares.iter().sum::<f64>() / shares.len() as f64)
    }

    pub fn edge_set(&self, years: std::ops::RangeInclusive<Year>) -> BTreeSet<(usize, usize)> {
        let mut s = BTreeSet::new();
        for (yi, y) in self.years.iter().enumerate() {
            if years.contains(y) {
                s.extend(self.edges(yi));
            }
        }
        s
    }

    /// Local clustering by explicit neighbor-pair enumeration.
    pub fn clustering(&self, yi: usize, a: usize) -> Option<f64> {
        let nb: Vec<usize> = (0..self.n).filter(|&b| self.adj[yi][a][b]).collect();
        if nb.len() < 2 {
            return None;
        }
        let mut links = 0;
        let mut possible = 0;
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                possible += 1;
                if self.adj[yi][nb[i]][nb[j]] {
                    links += 1;
                }
            }
        }
        Some(links as f64 / possible as f64)
    }

    /// Components by union-find over the active nodes.
    pub fn components(&self, yi: usize) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (a, b) in self.edges(yi) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for a in self.active(yi) {
            let r = find(&mut parent, a);
            groups.entry(r).or_default().push(a);
        }
        let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
        comps.sort();
        comps
    }

    /// Diameter of the largest component (smallest member breaks size ties) by Floyd-Warshall.
    pub fn diameter(&self, yi: usize) -> Option<u32> {
        let comps = self.components(yi);
        let best = comps
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))?;
        let k = best.len();
        let inf = u32::MAX / 4;
        let mut d = vec![vec![inf; k]; k];
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    d[i][j] = 0;
                } else if self.adj[yi][best[i]][best[j]] {
                    d[i][j] = 1;
                }
            }
        }
        for m in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if d[i][m] + d[m][j] < d[i][j] {
                        d[i][j] = d[i][m] + d[m][j];
                    }
                }
            }
        }
        d.iter().flatten().copied().max()
    }

    /// Pearson correlation of endpoint degrees over both edge orientations,
    /// by the raw-moment formula.
    pub fn assortativity(&self, yi: usize) -> Option<f64> {
        let mut pairs = Vec::new();
        for (a, b) in self.edges(yi) {
            let (da, db) = (self.degree(yi, a) as f64, self.degree(yi, b) as f64);
            pairs.push((da, db));
            pairs.push((db, da));
        }
        if pairs.is_empty() {
            return None;
        }
        let m = pairs.len() as f64;
        let sx: f64 = pairs.iter().map(|p| p.0).sum();
        let sy: f64 = pairs.iter().map(|p| p.1).sum();
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        let syy: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        let vx = sxx / m - (sx / m).powi(2);
        let vy = syy / m - (sy / m).powi(2);
        if vx.abs() < 1e-12 || vy.abs() < 1e-12 {
            return None;
        }
        Some((sxy / m - sx * sy / (m * m)) / (vx.sqrt() * vy.sqrt()))
    }

    /// Appearance years of a pair.
    pub fn years_of(&self, a: usize, b: usize) -> Vec<Year> {
        (0..self.years.len())
            .filter(|&yi| self.adj[yi][a][b])
            .map(|yi| self.years[yi])
            .collect()
    }
}

// ---------------------------------------------------------------- linear algebra

/// Eigenpairs of a symmetric matrix by cyclic Jacobi rotations, sorted by
/// decreasing eigenvalue. Eigenvectors are returned as rows.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance (denominator n - 1) by explicit double loops.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n as f64 - 1.0))
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- planted graph

/// Two planted clusters `A = 0..10`, `B = 10..20` over `n` nodes; only A-B
/// pairs ever co-occur, each with probability 0.5 per year.
pub struct Planted {
    pub n: usize,
    pub events: Vec<EdgeEvent>,
    pub features: Vec<Vec<f64>>,
}

pub fn planted_two_cluster(seed: u64, n: usize, years: std::ops::RangeInclusive<Year>, dim: usize) -> Planted {
    let mut r = rng(seed);
    let mut events = Vec::new();
    for year in years {
        for a in 0..10u32 {
            for b in 10..20u32 {
                if r.gen_bool(0.5) {
                    events.push(EdgeEvent {
                        year,
                        u: NodeId(a),
                        v: NodeId(b),
                        weight: 1,
                    });
                }
            }
        }
    }
    let features = (0..n)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let signal = match (i, j) {
                        (0..=9, 0) | (10..=19, 1) => 1.0,
                        _ => 0.0,
                    };
                    signal + r.gen_range(-0.1..0.1)
                })
                .collect()
        })
        .collect();
    Planted { n, events, features }
}

/// Pair-set helper for set-difference oracles.
pub fn pairs_of(events: &[EdgeEvent], year: Year) -> HashSet<(u32, u32)> {
    events
        .iter()
        .filter(|e| e.year == year)
        .map(|e| (e.u.0, e.v.0))
        .collect()
}
