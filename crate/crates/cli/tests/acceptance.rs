//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The optional full-data criterion runs when `FOSBENCH_OPENALEX_DIR` points
//! at a directory holding `concepts.jsonl` and `works.jsonl`; otherwise it
//! prints SKIP.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fosbench_core::baselines::{gradient_check, train, Example, MlpScorer, ScorerParams, ScorerShape, TrainConfig};
use fosbench_core::diagnostics::{diagnose, recurrence_surprise, tet_data, Churn, DiagnosticsConfig, EdgeTag};
use fosbench_core::features::{
    compose, compose_node, feature_terms, level_encoding, pca_fit, EmbeddingTable, FeatureKind, FeatureMask,
};
use fosbench_core::graph::{BuildOptions, EdgeEvent, SplitManifest, TemporalGraph};
use fosbench_core::ingest::{parse_concepts, parse_works, ConceptCatalog, ParseOptions, WorkOptions};
use fosbench_core::sampling::{derive_rng, sample_neighbors, time_aware_probabilities, NegativePools};
use fosbench_core::{
    auc_roc, average_precision, evaluate, EdgeBank, EdgeBankMode, EvalConfig, FirstSeen, LinkScorer, NegativeRegime,
    NeighborStrategy, NodeId, SamplerConfig, Year, YearRange,
};
use oracles::*;
use rand::Rng;
use serde_json::Value;
use sha2::{Digest, Sha256};

type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let outcome = match result {
        Ok(Ok(())) => match limit {
            Some(l) if elapsed > l => Outcome::Fail(format!("took {elapsed:.1?}, limit {l:?}")),
            _ => Outcome::Pass,
        },
        Ok(Err(msg)) if msg.starts_with("SKIP") => Outcome::Skip(msg),
        Ok(Err(msg)) => Outcome::Fail(msg),
        Err(panic) => Outcome::Fail(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    match &outcome {
        Outcome::Pass => println!("PASS  {name}  ({elapsed:.2?})"),
        Outcome::Fail(msg) => println!("FAIL  {name}  ({elapsed:.2?}): {msg}"),
        Outcome::Skip(msg) => println!(
            "SKIP  {name}: {}",
            msg.trim_start_matches("SKIP").trim_start_matches(':').trim()
        ),
    }
    outcome
}

// ---------------------------------------------------------------- metrics

fn metric_oracle() -> Check {
    let mut r = rng(42);
    for i in 0..500 {
        let b = random_batch(&mut r, 40);
        let (ap, auc) = (average_precision(&b).unwrap(), auc_roc(&b).unwrap());
        ensure!(
            (ap - ap_oracle(&b)).abs() <= 1e-9,
            "batch {i}: AP {ap} vs {}",
            ap_oracle(&b)
        );
        ensure!(
            (auc - auc_oracle(&b)).abs() <= 1e-9,
            "batch {i}: AUC {auc} vs {}",
            auc_oracle(&b)
        );
    }
    let tied = vec![(0.3, true), (0.3, false), (0.3, true), (0.3, true)];
    ensure!(average_precision(&tied).unwrap() == ap_oracle(&tied), "all-tie AP");
    ensure!(auc_roc(&tied).unwrap() == auc_oracle(&tied), "all-tie AUC");
    ensure!(auc_roc(&tied).unwrap() == 0.5, "all-tie AUC is not 0.5");
    let one = vec![(0.2, false), (0.9, true)];
    ensure!(
        average_precision(&one).unwrap() == 1.0 && auc_roc(&one).unwrap() == 1.0,
        "single threshold"
    );
    Ok(())
}

// ---------------------------------------------------------------- edgebank

fn edgebank_oracle_equivalence() -> Check {
    for seed in 0..100u64 {
        let n = 10 + (seed % 40) as u32;
        let mut events = random_stream(seed, n, 1990..=2010, 400);
        events.truncate(5000);
        let mut sorted = events.clone();
        sorted.sort();
        let window = 1 + (seed % 6) as u32;
        let mut inf = EdgeBank::new(EdgeBankMode::Infinite);
        let mut tw = EdgeBank::new(EdgeBankMode::TimeWindow { years: window });
        let mut r = rng(seed ^ 0xe6);
        let mut g = derive_rng(seed, 0);
        for t in 1990..=2011 {
            let mut queries: Vec<(NodeId, NodeId)> =
                sorted.iter().filter(|e| e.year == t).map(|e| (e.v, e.u)).collect();
            queries.truncate(40);
            for _ in 0..20 {
                let a = r.gen_range(0..n);
                let b = (a + r.gen_range(1..n)) % n;
                queries.push((NodeId(a), NodeId(b)));
            }
            let si = inf.score(t, &queries, &mut g).unwrap();
            let sw = tw.score(t, &queries, &mut g).unwrap();
            for (k, &(u, v)) in queries.iter().enumerate() {
                ensure!(
                    si[k] == edgebank_oracle(&events, u, v, t, None),
                    "infinite, stream {seed}, year {t}"
                );
                ensure!(
                    sw[k] == edgebank_oracle(&events, u, v, t, Some(window)),
                    "window {window}, stream {seed}, year {t}"
                );
            }
            let year: Vec<_> = sorted.iter().filter(|e| e.year == t).copied().collect();
            inf.observe(t, &year).unwrap();
            tw.observe(t, &year).unwrap();
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- graph

fn graph_construction() -> Check {
    let horizon = YearRange::new(2001, 2009).unwrap();
    let manifest = SplitManifest {
        train: YearRange::new(2001, 2005).unwrap(),
        val: Some(YearRange::new(2006, 2007).unwrap()),
        test: YearRange::new(2008, 2009).unwrap(),
    };
    for seed in 0..20u64 {
        let drop = seed % 4 == 3;
        let corpus = random_corpus(seed, 50 + 22 * seed as usize);
        let (catalog, _) = parse_concepts(corpus.concepts_jsonl.as_bytes(), "c", ParseOptions::default()).unwrap();
        let opts = WorkOptions {
            strict: false,
            horizon: Some(horizon),
        };
        let (works, _) = parse_works(corpus.works_jsonl.as_bytes(), "w", &catalog, opts).unwrap();
        let g = TemporalGraph::build(
            &works,
            &catalog,
            horizon,
            BuildOptions {
                drop_ancestor_pairs: drop,
            },
        );
        let counts = pair_counts(&corpus, 2001, 2009, drop);
        let n = g.vertex_count();
        let names = g.vertices().to_vec();
        ensure!(
            names == corpus.parents.keys().cloned().collect::<Vec<_>>(),
            "vertex set, corpus {seed}"
        );
        let cum: Vec<_> = (2001..=2009).map(|t| g.cumulative_adjacency(t).unwrap()).collect();
        for (ti, t) in (2001..=2009).enumerate() {
            let a_t = g.binary_adjacency(t).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let (u, v) = (NodeId(i as u32), NodeId(j as u32));
                    let key = |s: Year| (s, names[i.min(j)].clone(), names[i.max(j)].clone());
                    let w = if i == j {
                        0
                    } else {
                        counts.get(&key(t)).copied().unwrap_or(0)
                    };
                    ensure!(g.weight(u, v, t) == w, "w_{t}({i},{j}) corpus {seed}");
                    ensure!(a_t.get(u, v) == (w > 0), "A_{t}({i},{j}) corpus {seed}");
                    let seen = i != j && (2001..=t).any(|s| counts.contains_key(&key(s)));
                    ensure!(cum[ti].get(u, v) == seen, "cumulative A_{t}({i},{j}) corpus {seed}");
                    if ti > 0 {
                        ensure!(
                            !cum[ti - 1].get(u, v) || cum[ti].get(u, v),
                            "monotonicity at {t}, corpus {seed}"
                        );
                    }
                    if i < j {
                        let tau = (2001..=2009)
                            .find(|&s| counts.contains_key(&key(s)))
                            .map_or(FirstSeen::Never, FirstSeen::At);
                        ensure!(g.first_observation(u, v).unwrap() == tau, "tau({i},{j}) corpus {seed}");
                    }
                }
            }
        }
        let s = g.split(&manifest).unwrap();
        let filter = |a, b| {
            g.events()
                .iter()
                .filter(|e| e.year >= a && e.year <= b)
                .copied()
                .collect::<Vec<_>>()
        };
        ensure!(
            s.train == filter(2001, 2005).as_slice(),
            "train partition, corpus {seed}"
        );
        ensure!(s.val == filter(2006, 2007).as_slice(), "val partition, corpus {seed}");
        ensure!(s.test == filter(2008, 2009).as_slice(), "test partition, corpus {seed}");
    }
    Ok(())
}

// ---------------------------------------------------------------- sampling

fn key(a: NodeId, b: NodeId) -> (u32, u32) {
    (a.0.min(b.0), a.0.max(b.0))
}

fn sampler_purity() -> Check {
    let mut events = random_stream(2024, 50, 2000..=2009, 300);
    events.sort();
    let (train, test): (Vec<EdgeEvent>, Vec<EdgeEvent>) = events.into_iter().partition(|e| e.year <= 2006);
    let pools = NegativePools::new(50, &train, &test, &[]);
    let train_set: HashSet<_> = train.iter().map(|e| (e.u.0, e.v.0)).collect();
    let test_only: HashSet<_> = test
        .iter()
        .map(|e| (e.u.0, e.v.0))
        .filter(|p| !train_set.contains(p))
        .collect();
    let mut rng = derive_rng(1, 0);
    for regime in [NegativeRegime::Historical, NegativeRegime::Inductive] {
        let pool = if regime == NegativeRegime::Historical {
            &train_set
        } else {
            &test_only
        };
        let (mut violations, mut pooled) = (0, 0);
        for _ in 0..100_000 {
            let pos = test[rng.gen_range(0..test.len())];
            let active: HashSet<_> = test
                .iter()
                .filter(|e| e.year == pos.year)
                .map(|e| (e.u.0, e.v.0))
                .collect();
            let d = pools
                .sample_negatives(pos.u, pos.v, pos.year, regime, 1, &mut rng)
                .unwrap()[0];
            let pair = key(pos.u, d.dst);
            if d.fallback {
                let any = (0..50u32).any(|c| {
                    let p = key(pos.u, NodeId(c));
                    c != pos.u.0 && pool.contains(&p) && !active.contains(&p)
                });
                if any || d.dst == pos.v {
                    violations += 1;
                }
            } else {
                pooled += 1;
                if d.dst == pos.u || !pool.contains(&pair) || active.contains(&pair) {
                    violations += 1;
                }
            }
        }
        ensure!(violations == 0, "{regime}: {violations} pool violations");
        ensure!(pooled > 0, "{regime}: pool never used");
    }

    let pos = test[0];
    let mut counts = [0usize; 50];
    let draws = 100_000;
    let mut rng = derive_rng(2, 0);
    for _ in 0..draws {
        let d = pools
            .sample_negatives(pos.u, pos.v, pos.year, NegativeRegime::Random, 1, &mut rng)
            .unwrap()[0];
        counts[d.dst.index()] += 1;
    }
    ensure!(counts[pos.v.index()] == 0, "random regime returned the positive");
    let p = 1.0 / 49.0;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        if i != pos.v.index() {
            ensure!(
                (c as f64 - draws as f64 * p).abs() <= 3.0 * sigma,
                "random destination {i}: {c} draws"
            );
        }
    }

    let t = 2010;
    let years = [2009, 2008, 2008, 2006, 2003, 1990];
    let history: Vec<(NodeId, Year)> = years
        .iter()
        .enumerate()
        .map(|(i, &y)| (NodeId(i as u32 + 1), y))
        .collect();
    for alpha in [0.0, 0.5, 10.0] {
        let w: Vec<f64> = years.iter().map(|&y| (-alpha * (t - y) as f64).exp()).collect();
        let z: f64 = w.iter().sum();
        let analytic: Vec<f64> = w.iter().map(|x| x / z).collect();
        let lib = time_aware_probabilities(t, &history, alpha);
        ensure!(
            analytic.iter().zip(&lib).all(|(a, b)| (a - b).abs() < 1e-12),
            "alpha {alpha}: probabilities"
        );
        let mut rng = derive_rng(3, (alpha * 10.0) as u64);
        let mut counts = vec![0usize; years.len()];
        for _ in 0..draws {
            let s = sample_neighbors(t, &history, NeighborStrategy::TimeAware, 1, alpha, &mut rng).unwrap();
            counts[s.neighbors[0].0.index() - 1] += 1;
        }
        let l1: f64 = counts
            .iter()
            .zip(&analytic)
            .map(|(&c, p)| (c as f64 / draws as f64 - p).abs())
            .sum();
        ensure!(l1 <= 0.02, "alpha {alpha}: L1 distance {l1}");
    }
    Ok(())
}

// ---------------------------------------------------------------- features

fn catalog_and_table(seed: u64, n: usize, d: usize, dyadic: bool) -> (ConceptCatalog, EmbeddingTable) {
    let mut r = rng(seed);
    let mut lines = String::new();
    let mut texts = BTreeSet::new();
    for i in 0..n {
        let level = if i < 3 { 0 } else { 1 + i % 3 };
        let ancestors: BTreeSet<String> = if level == 0 {
            BTreeSet::new()
        } else {
            (0..r.gen_range(1..=2))
                .map(|_| format!("C{:03}", r.gen_range(0..i.min(3 * level))))
                .collect()
        };
        let ancestors: Vec<String> = ancestors.into_iter().collect();
        let count = [0, 1, 2, 4][r.gen_range(0..4)];
        let related: Vec<String> = (0..count).map(|_| format!("topic {}", r.gen_range(0..40))).collect();
        let desc = if r.gen_bool(0.7) {
            format!("\"about {i}\"")
        } else {
            "null".into()
        };
        lines.push_str(&format!(
            "{{\"id\":\"C{i:03}\",\"display_name\":\"Name {i}\",\"level\":{level},\"ancestors\":{ancestors:?},\"related_concepts\":{related:?},\"description\":{desc}}}\n"
        ));
        texts.insert(format!("Name {i}"));
        texts.insert(format!("about {i}"));
        texts.extend(related);
    }
    let (catalog, _) = parse_concepts(lines.as_bytes(), "c", ParseOptions { strict: true }).unwrap();
    let mut table = EmbeddingTable::new(d);
    for text in texts {
        let v = (0..d)
            .map(|_| {
                if dyadic {
                    r.gen_range(-64i32..64) as f64 / 64.0
                } else {
                    r.gen_range(-1.0..1.0)
                }
            })
            .collect();
        table.insert(text, v).unwrap();
    }
    (catalog, table)
}

fn feature_pipeline() -> Check {
    for d in (2..=768).step_by(2) {
        for level in 0..8 {
            for p in level_encoding(level, d).unwrap().chunks(2) {
                ensure!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() <= 1e-12, "level {level} d {d}");
            }
        }
    }

    let (catalog, table) = catalog_and_table(2, 40, 8, true);
    let base_mask = FeatureMask::default().without(FeatureKind::Level);
    for rec in catalog.records() {
        let terms = feature_terms(rec, &table).unwrap();
        let base = compose_node(rec, &table, base_mask).unwrap();
        for kind in [
            FeatureKind::Name,
            FeatureKind::Desc,
            FeatureKind::Ancestor,
            FeatureKind::Related,
        ] {
            let without = compose_node(rec, &table, base_mask.without(kind)).unwrap();
            for i in 0..8 {
                ensure!(
                    base[i] - without[i] == terms[kind as usize][i],
                    "{}: {kind:?} mask",
                    rec.field_id
                );
            }
        }
    }

    for seed in 0..10 {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..12).map(|_| r.gen_range(-3.0..3.0)).collect())
            .collect();
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let e = pca_fit(&rows, k).unwrap().reconstruction_error(&rows).unwrap();
            ensure!(e <= prev + 1e-9, "matrix {seed}: error rises at k={k}");
            prev = e;
        }
        let (values, _) = jacobi_eigen(&covariance(&rows));
        let fit = pca_fit(&rows, 12).unwrap();
        ensure!(
            fit.explained_variance
                .iter()
                .zip(&values)
                .all(|(a, b)| (a - b).abs() < 1e-9),
            "matrix {seed}: spectrum differs from Jacobi"
        );

        let (n, d, k) = (40, 20, 1 + seed as usize % 5);
        let basis: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let mean: Vec<f64> = (0..d).map(|_| r.gen_range(-5.0..5.0)).collect();
        let planted: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..k).map(|_| r.gen_range(-2.0..2.0)).collect();
                (0..d)
                    .map(|j| mean[j] + (0..k).map(|i| c[i] * basis[i][j]).sum::<f64>())
                    .collect()
            })
            .collect();
        let e = pca_fit(&planted, k).unwrap().reconstruction_error(&planted).unwrap();
        ensure!(e <= 1e-8, "planted {k}-dim subspace: error {e}");
    }

    let (catalog, table) = catalog_and_table(4, 150, 768, false);
    let mut f = compose(&catalog, &table, FeatureMask::default()).unwrap();
    ensure!(f.raw_dim() == 768, "raw dim {}", f.raw_dim());
    f.reduce(100).unwrap();
    let reduced = f.reduced.as_ref().unwrap();
    ensure!(
        reduced.len() == 150 && reduced.iter().all(|r| r.len() == 100),
        "reduced dim is not 100"
    );
    Ok(())
}

// ---------------------------------------------------------------- scorer

fn scorer_numerics() -> Check {
    for linear_head in [true, false] {
        let shape = ScorerShape {
            feature_dim: 6,
            time_dim: 4,
            embed_dim: 8,
            hidden_dim: 10,
            linear_head,
        };
        for seed in 0..3 {
            let params = ScorerParams::random(shape, &mut derive_rng(seed, 9), 0.5).unwrap();
            let mut r = rng(seed);
            let din = shape.input_dim();
            let batch: Vec<Example> = (0..12)
                .map(|i| Example {
                    x_src: (0..din).map(|_| r.gen_range(-1.0..1.0)).collect(),
                    x_dst: (0..din).map(|_| r.gen_range(-1.0..1.0)).collect(),
                    label: (i % 2) as f64,
                })
                .collect();
            let report = gradient_check(&params, &batch, usize::MAX, seed).unwrap();
            ensure!(report.checked == shape.param_count(), "not every parameter checked");
            ensure!(
                report.max_rel_error < 1e-4,
                "gradient error {} (linear head {linear_head})",
                report.max_rel_error
            );
        }
    }

    let p = planted_two_cluster(17, 200, 1991..=2020, 8);
    let graph = TemporalGraph::from_events(vertex_names(p.n), YearRange::new(1991, 2020).unwrap(), p.events).unwrap();
    let manifest = SplitManifest {
        train: YearRange::new(1991, 2010).unwrap(),
        val: Some(YearRange::new(2011, 2015).unwrap()),
        test: YearRange::new(2016, 2020).unwrap(),
    };
    let features = Arc::new(p.features);
    let sampler = SamplerConfig::default();
    let test_ap = |params: ScorerParams| {
        let s = graph.split(&manifest).unwrap();
        let pools = NegativePools::new(graph.vertex_count(), s.train, s.test, &[]);
        let mut scorer = MlpScorer::new(params, features.clone(), &sampler).unwrap();
        let cfg = EvalConfig {
            regimes: vec![NegativeRegime::Random],
            batch_size: 300,
            seed: 1,
            negatives_per_positive: 1,
        };
        evaluate(&mut scorer, &graph, s.test, &pools, &cfg).unwrap().regimes[0].mean_ap
    };
    let cfg = TrainConfig {
        learning_rate: 5e-3,
        batch_size: 50,
        max_epochs: 30,
        patience: 30,
        embed_dim: 16,
        hidden_dim: 16,
        time_dim: 4,
        seed: 3,
        ..TrainConfig::default()
    };
    let shape = ScorerShape {
        feature_dim: 8,
        time_dim: 4,
        embed_dim: 16,
        hidden_dim: 16,
        linear_head: false,
    };
    let base = test_ap(ScorerParams::init(shape, 3).unwrap());
    ensure!((base - 0.5).abs() <= 0.05, "untrained AP {base}");
    let outcome = train(&graph, &manifest, features.clone(), &cfg, &sampler).unwrap();
    ensure!(outcome.log.len() <= 30, "{} epochs", outcome.log.len());
    let ap = test_ap(outcome.params);
    ensure!(ap > 0.9, "trained AP {ap}");
    Ok(())
}

// ---------------------------------------------------------------- diagnostics

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

fn diagnostics_brute_force() -> Check {
    const YEARS: std::ops::RangeInclusive<Year> = 2000..=2009;
    let manifest = SplitManifest {
        train: YearRange::new(2000, 2005).unwrap(),
        val: Some(YearRange::new(2006, 2007).unwrap()),
        test: YearRange::new(2008, 2009).unwrap(),
    };
    for seed in 0..10u64 {
        let n = 8 + 3 * seed as usize;
        let mut events = random_stream(500 + seed, n as u32, YEARS, 4 + 4 * seed as usize);
        if seed % 3 == 1 {
            events.retain(|e| e.year != 2000 + seed as i32);
        }
        let d = DenseStream::new(n, YEARS, &events);
        let g = TemporalGraph::from_events(vertex_names(n), YearRange::new(2000, 2009).unwrap(), events).unwrap();
        let r = diagnose(&g, &manifest, &DiagnosticsConfig::default()).unwrap();
        ensure!(close(r.summary.novelty, d.novelty(), 1e-10), "stream {seed}: novelty");
        let (train, test) = (d.edge_set(2000..=2005), d.edge_set(2008..=2009));
        let both = test.intersection(&train).count();
        ensure!(
            r.summary.recurrence == Some(both as f64 / train.len() as f64),
            "stream {seed}: recurrence"
        );
        ensure!(
            r.summary.surprise == Some((test.len() - both) as f64 / test.len() as f64),
            "stream {seed}: surprise"
        );
        let mut prev_active: Option<usize> = None;
        for (yi, &t) in d.years.iter().enumerate() {
            let edges = d.edges(yi);
            let active = d.active(yi);
            let node = &r.nodes[yi];
            ensure!(node.active_nodes == active.len(), "{seed}/{t}: active nodes");
            let deg: usize = (0..n).map(|a| d.degree(yi, a)).sum();
            let mean_deg = (!active.is_empty()).then(|| deg as f64 / active.len() as f64);
            ensure!(close(node.mean_degree, mean_deg, 1e-10), "{seed}/{t}: mean degree");
            let local: Vec<f64> = active.iter().filter_map(|&a| d.clustering(yi, a)).collect();
            let clustering = (!active.is_empty()).then(|| local.iter().sum::<f64>() / active.len() as f64);
            ensure!(close(node.clustering, clustering, 1e-10), "{seed}/{t}: clustering");
            let growth = prev_active
                .filter(|&p| p > 0)
                .map(|p| (active.len() as f64 - p as f64) / p as f64);
            ensure!(node.growth_rate == growth, "{seed}/{t}: growth rate");
            prev_active = Some(active.len());

            let e = &r.edges[yi];
            ensure!(e.edge_count == edges.len(), "{seed}/{t}: edge count");
            ensure!(
                e.density == edges.len() as f64 / (n * (n - 1) / 2) as f64,
                "{seed}/{t}: density"
            );
            let repeated = edges.iter().filter(|&&(a, b)| d.seen_before(yi, a, b)).count();
            ensure!(
                e.repetition_rate == (!edges.is_empty()).then(|| repeated as f64 / edges.len() as f64),
                "{seed}/{t}: repetition rate"
            );
            ensure!(
                (r.tea[yi].new_edges, r.tea[yi].repeated_edges) == (edges.len() - repeated, repeated),
                "{seed}/{t}: TEA row"
            );
            let comps = d.components(yi);
            ensure!(r.graph[yi].components == comps.len(), "{seed}/{t}: components");
            ensure!(r.graph[yi].diameter == d.diameter(yi), "{seed}/{t}: diameter");
            let ty = &r.temporal[yi];
            ensure!(
                close(ty.assortativity, d.assortativity(yi), 1e-10),
                "{seed}/{t}: assortativity"
            );
            if yi > 0 {
                let prev: BTreeSet<_> = d.edges(yi - 1).into_iter().collect();
                let cur: BTreeSet<_> = edges.iter().copied().collect();
                let (new, lost) = (cur.difference(&prev).count(), prev.difference(&cur).count());
                let want = match (new, lost) {
                    (0, 0) => Churn::Undefined,
                    (_, 0) => Churn::Infinite,
                    _ => Churn::Value(new as f64 / lost as f64),
                };
                ensure!(ty.churn == want, "{seed}/{t}: churn");
            }
        }
        for row in tet_data(&g, &manifest).unwrap() {
            let ys = d.years_of(row.u.index(), row.v.index());
            ensure!(row.years == ys, "{seed}: TET presence");
            let in_train = ys.iter().any(|y| (2000..=2005).contains(y));
            let in_test = ys.iter().any(|y| (2008..=2009).contains(y));
            let tag = match (in_train, in_test) {
                (true, _) => EdgeTag::TrainSeen,
                (false, true) => EdgeTag::TestOnly,
                _ => EdgeTag::Other,
            };
            ensure!(row.tag == tag, "{seed}: TET tag");
        }
        for row in &r.edge_table {
            let ys = d.years_of(row.u.index(), row.v.index());
            ensure!(row.frequency == ys.len() && row.first == ys[0], "{seed}: edge table");
        }
    }

    let ev = |year, u, v| EdgeEvent {
        year,
        u: NodeId(u),
        v: NodeId(v),
        weight: 1,
    };
    let train = [
        ev(2000, 0, 1),
        ev(2000, 0, 2),
        ev(2000, 0, 3),
        ev(2000, 0, 4),
        ev(2000, 0, 5),
    ];
    let test = [ev(2001, 0, 1), ev(2001, 0, 2), ev(2001, 1, 2)];
    let rs = recurrence_surprise(&train, &test).unwrap();
    ensure!(
        rs.recurrence == 0.4 && (rs.surprise - 1.0 / 3.0).abs() < 1e-15,
        "constructed example"
    );
    ensure!(
        (rs.recurrence + rs.surprise - 1.0).abs() > 0.2,
        "recurrence and surprise sum to one"
    );

    let dir = tempfile::TempDir::new().unwrap();
    fosbench(&["build"], dir.path(), &[])?;
    fosbench(&["diagnose"], dir.path(), &[])?;
    let got = read_json(&dir.path().join("diagnostics.json"))?;
    let want = read_json(&fixture("golden_diagnostics.json"))?;
    let mut bad = 0;
    golden_diff(&want, &got, "", &mut bad);
    ensure!(bad == 0, "{bad} fields differ from the networkx golden file");
    Ok(())
}

fn golden_diff(want: &Value, got: &Value, key: &str, bad: &mut usize) {
    match (want, got) {
        (Value::Object(w), Value::Object(g)) => {
            for (k, wv) in w.iter().filter(|(k, _)| k.as_str() != "max_diameter_of_largest") {
                match g.get(k) {
                    Some(gv) => golden_diff(wv, gv, k, bad),
                    None => *bad += 1,
                }
            }
        }
        (Value::Array(w), Value::Array(g)) if w.len() == g.len() => {
            w.iter().zip(g).for_each(|(a, b)| golden_diff(a, b, key, bad));
        }
        (Value::Number(w), Value::Number(g)) if w.is_f64() || g.is_f64() => {
            let mean_like =
                key.starts_with("mean") || key.starts_with("clustering") || key == "assortativity" || key == "novelty";
            let tol = if mean_like { 1e-10 } else { 0.0 };
            if (w.as_f64().unwrap() - g.as_f64().unwrap()).abs() > tol {
                *bad += 1;
            }
        }
        (w, g) if w == g => {}
        _ => *bad += 1,
    }
}

// ---------------------------------------------------------------- CLI

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read_json(path: &Path) -> std::result::Result<Value, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs a subcommand against the fixture config.
fn fosbench(cmd: &[&str], out: &Path, extra: &[&str]) -> std::result::Result<String, String> {
    let config = fixture("fixture.toml");
    let output = Command::new(env!("CARGO_BIN_EXE_fosbench"))
        .args(cmd)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!(
            "{cmd:?} {extra:?}: {}",
            String::from_utf8_lossy(&output.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

fn tree_hashes(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex::encode(Sha256::digest(fs::read(&path).unwrap())));
            }
        }
    }
    out
}

fn determinism() -> Check {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::TempDir::new().unwrap()).collect();
    for dir in &runs {
        let out = dir.path();
        for cmd in ["build", "features", "split", "train", "diagnose"] {
            fosbench(&[cmd], out, &[])?;
        }
        for scorer in ["edgebank", "edgebank-tw", "random", "model"] {
            fosbench(&["eval"], out, &["--scorer", scorer, "--audit"])?;
        }
        fosbench(&["predict"], out, &[])?;
        fosbench(
            &["predict"],
            out,
            &["--scorer", "model", "--beam", "3", "--year", "2018"],
        )?;
    }
    let (a, b) = (tree_hashes(runs[0].path()), tree_hashes(runs[1].path()));
    ensure!(a.len() >= 20, "only {} output files", a.len());
    let differing: Vec<_> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    ensure!(
        a.len() == b.len() && differing.is_empty(),
        "differing outputs: {differing:?}"
    );
    Ok(())
}

// ---------------------------------------------------------------- full data

fn root_ids(concepts: &Path) -> std::result::Result<Vec<String>, String> {
    let text = fs::read_to_string(concepts).map_err(|e| e.to_string())?;
    let mut found = BTreeMap::new();
    for line in text.lines() {
        let Ok(v) = serde_json::from_str::<Value>(line) else {
            continue;
        };
        if v["level"] == 0 {
            if let (Some(name @ ("Art" | "Business")), Some(id)) = (v["display_name"].as_str(), v["id"].as_str()) {
                found.insert(name.to_string(), id.to_string());
            }
        }
    }
    ensure!(
        found.len() == 2,
        "Art and Business roots not found in {}",
        concepts.display()
    );
    Ok(found.into_values().collect())
}

fn full_data() -> Check {
    let Some(dir) = std::env::var_os("FOSBENCH_OPENALEX_DIR") else {
        return Err("SKIP: set FOSBENCH_OPENALEX_DIR to a directory with concepts.jsonl and works.jsonl".into());
    };
    let dir = PathBuf::from(dir);
    let (concepts, works) = (dir.join("concepts.jsonl"), dir.join("works.jsonl"));
    let roots = root_ids(&concepts)?.join(",");
    let run = tempfile::TempDir::new().unwrap();
    let out = run.path().display().to_string();
    let bin = env!("CARGO_BIN_EXE_fosbench");
    let call = |args: &[&str]| -> Check {
        let o = Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr).trim()
        );
        Ok(())
    };
    let (c, w) = (concepts.display().to_string(), works.display().to_string());
    call(&["build", "--concepts", &c, "--works", &w, "--roots", &roots])?;
    call(&["diagnose"])?;
    call(&["eval", "--scorer", "edgebank", "--regime", "random,historical"])?;

    let mut failures = Vec::new();
    let build = read_json(&run.path().join("build.json"))?;
    let nodes = build["active_vertices"].as_f64().unwrap_or(0.0);
    if (nodes - 3238.0).abs() > 0.01 * 3238.0 {
        failures.push(format!("nodes {nodes} (want 3238 +-1%)"));
    }
    let diag = read_json(&run.path().join("diagnostics.json"))?;
    for (name, want) in [("novelty", 0.19), ("recurrence", 0.40), ("surprise", 0.11)] {
        let got = diag["summary"][name].as_f64().unwrap_or(f64::NAN);
        if !((got - want).abs() <= 0.05) {
            failures.push(format!("{name} {got:.4} (want {want} +-0.05)"));
        }
    }
    let eval = read_json(&run.path().join("eval_edgebank.json"))?;
    let ap = |regime: &str| {
        eval["regimes"]
            .as_array()
            .and_then(|rs| rs.iter().find(|r| r["regime"] == regime))
            .and_then(|r| r["mean_ap"].as_f64())
            .unwrap_or(f64::NAN)
    };
    for (regime, want) in [("random", 0.7697), ("historical", 0.4852)] {
        let got = ap(regime);
        if !((got - want).abs() <= 0.05) {
            failures.push(format!("EdgeBank {regime} AP {got:.4} (want {want} +-0.05)"));
        }
    }
    if !(ap("random") > ap("historical")) {
        failures.push("EdgeBank random AP does not exceed historical".into());
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok(())
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let secs = Duration::from_secs;
    let outcomes = [
        run(
            "metric oracle equivalence (500 batches, 1e-9)",
            Some(secs(10)),
            metric_oracle,
        ),
        run(
            "EdgeBank oracle equivalence (100 streams, both modes)",
            Some(secs(30)),
            edgebank_oracle_equivalence,
        ),
        run("graph construction oracle (20 corpora)", None, graph_construction),
        run("sampler purity (100k draws per regime)", None, sampler_purity),
        run(
            "feature pipeline (encoding, masks, PCA, dim 100)",
            None,
            feature_pipeline,
        ),
        run(
            "scorer numerics (gradient check, planted task)",
            Some(secs(120)),
            scorer_numerics,
        ),
        run(
            "diagnostics golden tests (10 streams + networkx fixture)",
            None,
            diagnostics_brute_force,
        ),
        run("full-data reproduction (Art+Business)", None, full_data),
        run("determinism (every subcommand, hash comparison)", None, determinism),
    ];
    let failed = outcomes.iter().filter(|o| matches!(o, Outcome::Fail(_))).count();
    let passed = outcomes.iter().filter(|o| matches!(o, Outcome::Pass)).count();
    let skipped = outcomes.len() - failed - passed;
    println!("acceptance: {passed} passed, {failed} failed, {skipped} skipped");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
