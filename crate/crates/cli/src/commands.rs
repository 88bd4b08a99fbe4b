//! Subcommand implementations. Each reads its inputs from the config and the
//! run directory, writes stamped artifacts and records them in the manifest.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use fosbench_core::baselines::{self, Checkpoint, MlpScorer, RandomScorer};
use fosbench_core::diagnostics::diagnose;
use fosbench_core::evaluation::{rank_emerging, CandidateStrategy, RankConfig};
use fosbench_core::features::{compose, EmbeddingTable, NodeFeatureTable};
use fosbench_core::graph::{write_events_csv, BuildOptions, GraphBuilder, TemporalGraph};
use fosbench_core::ingest::{
    filter_domain, parse_concepts, parse_works_with, ConceptCatalog, ConceptParseReport, ParseOptions, WorkOptions,
    WorkParseReport,
};
use fosbench_core::sampling::NegativePools;
use fosbench_core::{evaluate, EdgeBank, EdgeBankMode, EvalConfig, LinkScorer, YearRange};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{usage, RunConfig, ScorerKind};
use crate::run::{read_json, RunDir};

const CATALOG: &str = "catalog.jsonl";
const EDGES: &str = "edges.csv";
const BUILD: &str = "build.json";
const FEATURES: &str = "features.txt";
const CHECKPOINT: &str = "checkpoint.json";

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BuildSummary {
    pub horizon: YearRange,
    pub vertices: usize,
    pub active_vertices: usize,
    pub events: usize,
    pub distinct_edges: usize,
    pub total_weight: u64,
    pub papers: usize,
    pub drop_ancestor_pairs: bool,
    pub concepts: ConceptReport,
    pub works: WorkReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConceptReport {
    pub lines: usize,
    pub parsed: usize,
    pub skipped: usize,
    pub kept_after_filter: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WorkReport {
    pub lines: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub bad_year: usize,
    pub out_of_horizon: usize,
    pub empty_after_filter: usize,
}

fn concept_report(r: &ConceptParseReport, kept: usize) -> ConceptReport {
    ConceptReport {
        lines: r.lines,
        parsed: r.parsed,
        skipped: r.skipped,
        kept_after_filter: kept,
    }
}

fn work_report(r: &WorkParseReport) -> WorkReport {
    WorkReport {
        lines: r.lines,
        parsed: r.parsed,
        malformed: r.malformed,
        bad_year: r.bad_year,
        out_of_horizon: r.out_of_horizon,
        empty_after_filter: r.empty_after_filter,
    }
}

pub fn build(cfg: &RunConfig) -> Result<()> {
    let concepts = cfg.concepts.as_deref().ok_or_else(|| usage("build needs --concepts"))?;
    let works = cfg.works.as_deref().ok_or_else(|| usage("build needs --works"))?;
    let mut run = RunDir::open(cfg, "build")?;
    run.input(concepts)?;
    run.input(works)?;

    let (full, creport) = parse_concepts(
        open(concepts)?,
        &source_name(concepts),
        ParseOptions { strict: cfg.strict },
    )?;
    let catalog = if cfg.roots.is_empty() {
        full
    } else {
        filter_domain(&full, &cfg.roots.iter().cloned().collect::<BTreeSet<_>>())?
    };
    info!("catalog: {} fields", catalog.len());

    let mut builder = GraphBuilder::new(
        &catalog,
        cfg.horizon,
        BuildOptions {
            drop_ancestor_pairs: cfg.drop_ancestor_pairs,
        },
    );
    let wreport = parse_works_with(
        open(works)?,
        &source_name(works),
        &catalog,
        WorkOptions {
            strict: cfg.strict,
            horizon: Some(cfg.horizon),
        },
        |w| {
            builder.add_work(&w);
            Ok(())
        },
    )?;
    let papers = builder.papers();
    let graph = builder.finish();

    let mut jsonl = Vec::new();
    catalog.write_jsonl(&mut jsonl)?;
    run.write_text(CATALOG, std::str::from_utf8(&jsonl)?)?;
    let mut edges = Vec::new();
    graph.write_edge_csv(&mut edges)?;
    run.write_text(EDGES, std::str::from_utf8(&edges)?)?;

    let active: BTreeSet<_> = graph.events().iter().flat_map(|e| [e.u, e.v]).collect();
    let summary = BuildSummary {
        horizon: cfg.horizon,
        vertices: graph.vertex_count(),
        active_vertices: active.len(),
        events: graph.events().len(),
        distinct_edges: graph.pair_spans().len(),
        total_weight: graph.total_weight(),
        papers,
        drop_ancestor_pairs: cfg.drop_ancestor_pairs,
        concepts: concept_report(&creport, catalog.len()),
        works: work_report(&wreport),
    };
    run.write_json(BUILD, &summary)?;
    println!(
        "nodes={} events={} edges={} weight={} papers={}",
        summary.vertices, summary.events, summary.distinct_edges, summary.total_weight, summary.papers
    );
    run.finish()
}

/// Catalog and graph written by `build`.
fn load_graph(cfg: &RunConfig) -> Result<(ConceptCatalog, TemporalGraph)> {
    let dir = cfg.out_dir()?;
    let path = dir.join(CATALOG);
    let (catalog, _) = parse_concepts(open(&path)?, &source_name(&path), ParseOptions { strict: true })?;
    let summary: BuildSummary = read_json(&dir.join(BUILD))?.body;
    let vertices: Vec<String> = catalog.ids().map(str::to_string).collect();
    let graph = TemporalGraph::read_edge_csv(open(&dir.join(EDGES))?, vertices, summary.horizon)?;
    Ok((catalog, graph))
}

fn load_features(cfg: &RunConfig, graph: &TemporalGraph) -> Result<Arc<Vec<Vec<f64>>>> {
    let path = cfg.out_dir()?.join(FEATURES);
    let table = EmbeddingTable::read(open(&path)?, &source_name(&path))?;
    Ok(Arc::new(NodeFeatureTable::from_table(graph.vertices(), &table)?))
}

#[derive(Debug, Serialize)]
struct PcaSummary<'a> {
    mask: String,
    raw_dim: usize,
    reduced_dim: usize,
    basis: Option<&'a fosbench_core::features::PcaBasis>,
}

pub fn features(cfg: &RunConfig) -> Result<()> {
    let emb = cfg
        .embeddings
        .as_deref()
        .ok_or_else(|| usage("features needs --embeddings"))?;
    let mut run = RunDir::open(cfg, "features")?;
    run.input(emb)?;
    let path = cfg.out_dir()?.join(CATALOG);
    let (catalog, _) = parse_concepts(open(&path)?, &source_name(&path), ParseOptions { strict: true })?;
    let table = EmbeddingTable::read(open(emb)?, &source_name(emb))?;
    if table.is_empty() {
        return Err(fosbench_core::Error::Empty(format!("{}: no embedding rows", emb.display())).into());
    }
    let mask = cfg.features.mask();
    let mut f = compose(&catalog, &table, mask)?;
    if cfg.features.pca_dim > 0 {
        f.reduce(cfg.features.pca_dim)?;
    }
    let mut meta = run.stamp_lines();
    meta.push(format!("mask={mask}"));
    let mut raw = Vec::new();
    f.write_raw(&mut raw, &meta)?;
    run.write_bytes("features_raw.txt", &raw)?;
    let mut inputs = Vec::new();
    if f.reduced.is_some() {
        meta.push(format!("pca_dim={}", cfg.features.pca_dim));
        f.write_reduced(&mut inputs, &meta)?;
    } else {
        f.write_raw(&mut inputs, &meta)?;
    }
    run.write_bytes(FEATURES, &inputs)?;
    run.write_json(
        "pca.json",
        &PcaSummary {
            mask: mask.to_string(),
            raw_dim: f.raw_dim(),
            reduced_dim: f.model_inputs().first().map_or(0, Vec::len),
            basis: f.basis.as_ref(),
        },
    )?;
    println!("fields={} raw_dim={} mask={mask}", f.ids.len(), f.raw_dim());
    run.finish()
}

#[derive(Debug, Serialize)]
struct SplitSummary {
    manifest: fosbench_core::graph::SplitManifest,
    train_events: usize,
    val_events: usize,
    test_events: usize,
    train_edges: usize,
    test_only_edges: usize,
}

pub fn split(cfg: &RunConfig) -> Result<()> {
    let mut run = RunDir::open(cfg, "split")?;
    let (_, graph) = load_graph(cfg)?;
    let s = graph.split(&cfg.manifest)?;
    for (name, events) in [
        ("split/train.csv", s.train),
        ("split/val.csv", s.val),
        ("split/test.csv", s.test),
    ] {
        let mut buf = Vec::new();
        write_events_csv(&graph, events, &mut buf)?;
        run.write_text(name, std::str::from_utf8(&buf)?)?;
    }
    let pools = NegativePools::new(graph.vertex_count(), s.train, s.test, &[]);
    let summary = SplitSummary {
        manifest: cfg.manifest,
        train_events: s.train.len(),
        val_events: s.val.len(),
        test_events: s.test.len(),
        train_edges: pools.train_edges().len(),
        test_only_edges: pools.test_only_edges().len(),
    };
    run.write_json("split.json", &summary)?;
    println!("train={} val={} test={}", s.train.len(), s.val.len(), s.test.len());
    run.finish()
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let mut run = RunDir::open(cfg, "train")?;
    let (_, graph) = load_graph(cfg)?;
    let features = load_features(cfg, &graph)?;
    let outcome = baselines::train(&graph, &cfg.manifest, features, &cfg.train, &cfg.sampler)?;
    let mut log = Vec::new();
    outcome.write_log_csv(&mut log)?;
    run.write_text("train_log.csv", std::str::from_utf8(&log)?)?;
    let ckpt = Checkpoint {
        params: outcome.params,
        train: cfg.train,
        sampler: cfg.sampler,
        best_epoch: outcome.best_epoch,
        best_val_ap: outcome.best_val_ap,
    };
    run.write_json(CHECKPOINT, &ckpt)?;
    println!("best_epoch={} best_val_ap={:.4}", ckpt.best_epoch, ckpt.best_val_ap);
    run.finish()
}

fn scorer(cfg: &RunConfig, graph: &TemporalGraph) -> Result<Box<dyn LinkScorer>> {
    Ok(match cfg.eval.scorer {
        ScorerKind::Edgebank => Box::new(EdgeBank::new(EdgeBankMode::Infinite)),
        ScorerKind::EdgebankTw => Box::new(EdgeBank::new(EdgeBankMode::TimeWindow { years: cfg.eval.window })),
        ScorerKind::Random => Box::new(RandomScorer::default()),
        ScorerKind::Model => {
            let ckpt: Checkpoint = read_json(&cfg.out_dir()?.join(CHECKPOINT))?.body;
            let features = load_features(cfg, graph)?;
            Box::new(MlpScorer::new(ckpt.params, features, &cfg.sampler)?)
        }
    })
}

fn scorer_label(cfg: &RunConfig) -> String {
    match cfg.eval.scorer {
        ScorerKind::Edgebank => "edgebank".into(),
        ScorerKind::EdgebankTw => format!("edgebank-tw{}", cfg.eval.window),
        ScorerKind::Random => "random".into(),
        ScorerKind::Model => "model".into(),
    }
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let mut run = RunDir::open(cfg, "eval")?;
    let (_, graph) = load_graph(cfg)?;
    let s = graph.split(&cfg.manifest)?;
    let pools = NegativePools::new(graph.vertex_count(), s.train, s.test, &[]);
    let mut scorer = scorer(cfg, &graph)?;
    let ecfg = EvalConfig {
        regimes: cfg.eval.regimes.clone(),
        batch_size: cfg.eval.batch_size,
        seed: cfg.seed,
        negatives_per_positive: cfg.sampler.negatives_per_positive,
    };
    let report = evaluate(scorer.as_mut(), &graph, s.test, &pools, &ecfg)?;
    let label = scorer_label(cfg);
    run.write_json(&format!("eval_{label}.json"), &report)?;
    let table = report.to_table();
    run.write_text(&format!("eval_{label}.txt"), &table)?;
    if cfg.eval.audit {
        let mut buf = Vec::new();
        report.write_audit_csv(&mut buf)?;
        run.write_text(&format!("eval_{label}_audit.csv"), std::str::from_utf8(&buf)?)?;
    }
    print!("{table}");
    run.finish()
}

pub fn diagnose_cmd(cfg: &RunConfig) -> Result<()> {
    let mut run = RunDir::open(cfg, "diagnose")?;
    let (_, graph) = load_graph(cfg)?;
    let report = diagnose(&graph, &cfg.manifest, &cfg.diagnose)?;
    run.write_json("diagnostics.json", &report)?;
    for (name, body) in report.csv_tables(&graph) {
        run.write_text(&format!("diagnostics/{name}"), &body)?;
    }
    let s = &report.summary;
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "novelty={} recurrence={} surprise={}",
        show(s.novelty),
        show(s.recurrence),
        show(s.surprise)
    );
    run.finish()
}

pub fn predict(cfg: &RunConfig) -> Result<()> {
    let mut run = RunDir::open(cfg, "predict")?;
    let (catalog, graph) = load_graph(cfg)?;
    let t = cfg.predict.year.unwrap_or(cfg.manifest.test.start - 1);
    if !graph.horizon().contains(t) {
        return Err(usage(format!("reference year {t} outside horizon {}", graph.horizon())));
    }
    let mut scorer = scorer(cfg, &graph)?;
    let rcfg = RankConfig {
        top_k: cfg.predict.top_k,
        strategy: match cfg.predict.beam {
            0 => CandidateStrategy::AllPairs,
            width => CandidateStrategy::PerSourceBeam { width },
        },
        max_candidates: cfg.predict.max_candidates,
        seed: cfg.seed,
    };
    let ranking = rank_emerging(scorer.as_mut(), &graph, t, &rcfg)?;
    let name = |id: &str| catalog.get(id).map_or(id.to_string(), |r| r.display_name.clone());
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["rank", "u", "v", "score", "concepts"])?;
    for p in &ranking.pairs {
        let (u, v) = (graph.vertex_id(p.u), graph.vertex_id(p.v));
        csv.write_record([
            p.rank.to_string(),
            u.to_string(),
            v.to_string(),
            p.score.to_string(),
            format!("{} - {}", name(u), name(v)),
        ])?;
    }
    let body = String::from_utf8(csv.into_inner()?)?;
    let mut text = format!(
        "# year={t} target_year={} scorer={} candidates={} truncated={}\n",
        t + 1,
        scorer_label(cfg),
        ranking.candidates,
        ranking.truncated
    );
    text.push_str(&body);
    run.write_text(&format!("predictions_{t}.csv"), &text)?;
    println!(
        "year={t} candidates={} written={}",
        ranking.candidates,
        ranking.pairs.len()
    );
    run.finish()
}
