//! `fosbench`: build, characterize and evaluate temporal field-of-study
//! co-occurrence benchmarks.
//!
//! Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fosbench_core::features::FeatureKind;
use fosbench_core::{NegativeRegime, NeighborStrategy, Year, YearRange};

use config::{RunConfig, ScorerKind, UsageError};

#[derive(Parser)]
#[command(
    name = "fosbench",
    version,
    about = "Temporal field-of-study link-prediction benchmark toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the taxonomy and works and write the yearly edge stream.
    Build(BuildArgs),
    /// Compose semantic node features and reduce them with PCA.
    Features(FeatureArgs),
    /// Write the train/validation/test event streams.
    Split(CommonArgs),
    /// Train the plug-in scorer and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a scorer under the negative-sampling regimes.
    Eval(EvalArgs),
    /// Compute dataset diagnostics and TEA/TET tables.
    Diagnose(CommonArgs),
    /// Rank not-yet-observed pairs by predicted score.
    Predict(PredictArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Config file (`.toml` or `.json`); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory holding every artifact.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Negative-sampling regimes, comma separated.
    #[arg(long, value_delimiter = ',')]
    regime: Vec<NegativeRegime>,
    /// Neighbor sampling strategy: uniform, recent or time_aware.
    #[arg(long)]
    neighbors: Option<NeighborStrategy>,
    /// Neighbor budget.
    #[arg(long = "S")]
    budget: Option<usize>,
    /// Recency factor of time-aware neighbor sampling.
    #[arg(long)]
    alpha: Option<f64>,
    /// Skip pairs where one field is an ancestor of the other.
    #[arg(long)]
    drop_ancestor_pairs: bool,
    /// Train year range, e.g. 2002-2017.
    #[arg(long)]
    train: Option<YearRange>,
    /// Validation year range.
    #[arg(long)]
    val: Option<YearRange>,
    /// Test year range.
    #[arg(long)]
    test: Option<YearRange>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long)]
    works: Option<PathBuf>,
    /// Root field ids of the domain filter, comma separated.
    #[arg(long, value_delimiter = ',')]
    roots: Vec<String>,
    /// Year horizon, e.g. 2002-2024.
    #[arg(long)]
    horizon: Option<YearRange>,
    /// Fail on the first malformed record.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct FeatureArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Feature terms to leave out, e.g. `desc` or `desc,level`.
    #[arg(long, value_delimiter = ',')]
    drop: Vec<FeatureKind>,
    /// PCA target dimension; 0 keeps raw vectors.
    #[arg(long)]
    pca_dim: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct ScorerArgs {
    /// edgebank, edgebank-tw, random or model.
    #[arg(long)]
    scorer: Option<ScorerKind>,
    /// Window of `edgebank-tw`, in years.
    #[arg(long)]
    window: Option<u32>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Also write the per-batch audit CSV.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Reference year t; pairs unseen through t are scored for t + 1.
    #[arg(long)]
    year: Option<Year>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Per-source beam width (0 scores all pairs).
    #[arg(long)]
    beam: Option<usize>,
}

fn base_config(c: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &c.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if !c.regime.is_empty() {
        cfg.eval.regimes = c.regime.clone();
    }
    if let Some(n) = c.neighbors {
        cfg.sampler.neighbor_strategy = n;
    }
    if let Some(s) = c.budget {
        cfg.sampler.neighbor_budget = s;
    }
    if let Some(a) = c.alpha {
        cfg.sampler.alpha = a;
    }
    if c.drop_ancestor_pairs {
        cfg.drop_ancestor_pairs = true;
    }
    if let Some(r) = c.train {
        cfg.manifest.train = r;
    }
    if let Some(r) = c.val {
        cfg.manifest.val = Some(r);
    }
    if let Some(r) = c.test {
        cfg.manifest.test = r;
    }
    Ok(cfg)
}

fn apply_scorer(cfg: &mut RunConfig, s: &ScorerArgs) {
    if let Some(k) = s.scorer {
        cfg.eval.scorer = k;
    }
    if let Some(w) = s.window {
        cfg.eval.window = w;
    }
}

fn resolve(command: &Command) -> Result<(RunConfig, Option<usize>)> {
    let (mut cfg, threads) = match command {
        Command::Build(a) => {
            let mut cfg = base_config(&a.common)?;
            if let Some(p) = &a.concepts {
                cfg.concepts = Some(p.clone());
            }
            if let Some(p) = &a.works {
                cfg.works = Some(p.clone());
            }
            if !a.roots.is_empty() {
                cfg.roots = a.roots.clone();
            }
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            }
            if a.strict {
                cfg.strict = true;
            }
            (cfg, a.common.threads)
        }
        Command::Features(a) => {
            let mut cfg = base_config(&a.common)?;
            if let Some(p) = &a.embeddings {
                cfg.embeddings = Some(p.clone());
            }
            if !a.drop.is_empty() {
                cfg.features.drop = a.drop.clone();
            }
            if let Some(k) = a.pca_dim {
                cfg.features.pca_dim = k;
            }
            (cfg, a.common.threads)
        }
        Command::Train(a) => {
            let mut cfg = base_config(&a.common)?;
            if let Some(e) = a.epochs {
                cfg.train.max_epochs = e;
            }
            if let Some(lr) = a.lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(p) = a.patience {
                cfg.train.patience = p;
            }
            if let Some(b) = a.batch_size {
                cfg.train.batch_size = b;
            }
            (cfg, a.common.threads)
        }
        Command::Eval(a) => {
            let mut cfg = base_config(&a.common)?;
            apply_scorer(&mut cfg, &a.scorer);
            if let Some(b) = a.batch_size {
                cfg.eval.batch_size = b;
            }
            if a.audit {
                cfg.eval.audit = true;
            }
            (cfg, a.common.threads)
        }
        Command::Predict(a) => {
            let mut cfg = base_config(&a.common)?;
            apply_scorer(&mut cfg, &a.scorer);
            if let Some(y) = a.year {
                cfg.predict.year = Some(y);
            }
            if let Some(k) = a.top_k {
                cfg.predict.top_k = k;
            }
            if let Some(b) = a.beam {
                cfg.predict.beam = b;
            }
            (cfg, a.common.threads)
        }
        Command::Split(c) | Command::Diagnose(c) => (base_config(c)?, c.threads),
    };
    cfg.finalize()?;
    Ok((cfg, threads))
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, threads) = resolve(&cli.command)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(config::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    log::info!("config hash {}", cfg.hash());
    match cli.command {
        Command::Build(_) => commands::build(&cfg),
        Command::Features(_) => commands::features(&cfg),
        Command::Split(_) => commands::split(&cfg),
        Command::Train(_) => commands::train(&cfg),
        Command::Eval(_) => commands::eval(&cfg),
        Command::Diagnose(_) => commands::diagnose_cmd(&cfg),
        Command::Predict(_) => commands::predict(&cfg),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use fosbench_core::Error;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                e if e.is_numeric() => 3,
                Error::InvalidArgument(_) | Error::InvalidManifest(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
