use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use oltr::dataset::{load_dataset, DatasetSpec};
use oltr::harness::{emit_results, parse_model, run_experiment, Algorithm, Checkpoint, RunConfig};
use oltr::metrics::{offline_performance, MetricsConfig};
use oltr::scorer::ScorerKind;
use oltr::verification::{verify_theorem, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "oltr",
    version,
    about = "Online learning to rank simulation lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated simulations and write summary.json, curves.csv and checkpoints.
    Run(Box<RunArgs>),
    /// Check the unbiasedness property by enumeration and Monte-Carlo sampling.
    VerifyTheorem(VerifyArgs),
    /// Offline NDCG@10 of a saved checkpoint on each fold's test queries.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// mq2007, mq2008, mslr-web10k, yahoo, istella, or a JSON dataset descriptor.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// One or more of pdgd, dbgd, pairwise, comma separated.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// linear, neural or neural:<hidden units>.
    #[arg(long)]
    model: Option<String>,
    /// perfect, navigational, informational, or a JSON click table.
    #[arg(long)]
    click: Option<String>,
    #[arg(long)]
    impressions: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = VerifyConfig::default().instances)]
    instances: usize,
    #[arg(long, default_value_t = VerifyConfig::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    data_root: PathBuf,
    /// Only this fold (1-based); all folds otherwise.
    #[arg(long)]
    fold: Option<usize>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::VerifyTheorem(args) => verify(args),
        Command::Evaluate(args) => evaluate(args),
    }
}

/// A preset name, or a JSON file describing the dataset.
fn dataset_spec(name: &str) -> Result<DatasetSpec> {
    match DatasetSpec::by_name(name) {
        Ok(spec) => Ok(spec),
        Err(e) if Path::new(name).is_file() => {
            let text = fs::read_to_string(name)?;
            let spec: DatasetSpec =
                serde_json::from_str(&text).with_context(|| format!("{e}; parsing {name}"))?;
            spec.validate()?;
            Ok(spec)
        }
        Err(e) => Err(e.into()),
    }
}

fn base_config(args: &RunArgs) -> Result<RunConfig> {
    let mut c = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &args.dataset {
        c.dataset = v.clone();
    }
    if let Some(v) = &args.data_root {
        c.data_root = Some(v.clone());
    }
    if let Some(v) = &args.model {
        c.model = parse_model(v).map_err(anyhow::Error::msg)?;
    }
    if let Some(v) = &args.click {
        c.click_model = v.clone();
    }
    if let Some(v) = args.impressions {
        c.impressions = v;
    }
    if let Some(v) = args.repeats {
        c.repeats = v;
    }
    if let Some(v) = args.seed {
        c.base_seed = v;
    }
    if let Some(v) = &args.out {
        c.output = Some(v.clone());
    }
    if let Some(v) = args.k {
        c.k = v;
    }
    if let Some(v) = args.lr {
        c.learning_rate = Some(v);
    }
    if let Some(v) = args.gamma {
        c.gamma = v;
    }
    if let Some(v) = args.eval_interval {
        c.eval_interval = v;
    }
    if let Some(v) = args.delta {
        c.delta = v;
    }
    if let Some(v) = args.epsilon {
        c.epsilon = v;
    }
    Ok(c)
}

fn run(args: RunArgs) -> Result<()> {
    let base = base_config(&args)?;
    let algorithms: Vec<Algorithm> = if args.algo.is_empty() {
        vec![base.algorithm]
    } else {
        args.algo
            .iter()
            .map(|a| a.parse().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?
    };
    let configs: Vec<RunConfig> = algorithms
        .into_iter()
        .map(|algorithm| RunConfig {
            algorithm,
            ..base.clone()
        })
        .collect();

    let Some(root) = base.data_root.clone() else {
        bail!("--data-root is required");
    };
    let Some(out) = base.output.clone() else {
        bail!("--out is required");
    };
    let spec = dataset_spec(&base.dataset)?;
    let dataset = load_dataset(&root, &spec)?;

    let outcome = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run_experiment(&configs, &dataset))?,
        None => run_experiment(&configs, &dataset)?,
    };
    emit_results(&outcome, &out)?;

    for arm in &outcome.report.arms {
        println!(
            "{:<16} offline {:.4} ({:.4})  online {:.1} ({:.1})  n={}",
            arm.label,
            arm.offline.mean,
            arm.offline.sd,
            arm.online.mean,
            arm.online.sd,
            arm.offline.n
        );
    }
    for c in &outcome.report.comparisons {
        println!(
            "{} vs {}: offline p={:.3e}, online p={:.3e}",
            c.a, c.b, c.offline.p, c.online.p
        );
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let config = VerifyConfig {
        instances: args.instances,
        samples: args.samples,
        seed: args.seed,
        ..VerifyConfig::default()
    };
    let report = verify_theorem(&config)?;
    write_json(&args.out, &serde_json::to_string_pretty(&report)?)?;
    let failed = report.instances.iter().filter(|r| !r.passed).count();
    let worst = report
        .instances
        .iter()
        .map(|r| r.max_monte_carlo_error)
        .fold(0.0, f64::max);
    println!(
        "{} instances, {failed} failed, worst Monte-Carlo deviation {worst:.2e}",
        report.instances.len()
    );
    if !report.passed {
        bail!(
            "sign conditions or consistency checks failed; see {}",
            args.out.display()
        );
    }
    Ok(())
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let checkpoint = Checkpoint::read(&args.params)?;
    let spec = dataset_spec(&args.dataset)?;
    if checkpoint.scorer.feature_dim != spec.feature_dim {
        bail!(
            "checkpoint expects {} features but {} has {}",
            checkpoint.scorer.feature_dim,
            spec.name,
            spec.feature_dim
        );
    }
    if checkpoint.parameters.len() != checkpoint.scorer.param_len() {
        bail!("checkpoint parameter count does not match its scorer");
    }
    let dataset = load_dataset(&args.data_root, &spec)?;
    let metrics = MetricsConfig::default();
    let folds: Vec<usize> = match args.fold {
        Some(0) => bail!("folds are numbered from 1"),
        Some(f) if f > dataset.folds.len() => bail!("dataset has {} folds", dataset.folds.len()),
        Some(f) => vec![f - 1],
        None => (0..dataset.folds.len()).collect(),
    };
    let kind = match checkpoint.scorer.kind {
        ScorerKind::Linear => "linear".to_string(),
        ScorerKind::Neural { hidden_units } => format!("neural:{hidden_units}"),
    };
    println!("model {kind}, {} parameters", checkpoint.parameters.len());
    for f in folds {
        let test = &dataset.folds[f].test;
        if test.is_empty() {
            println!("fold {}: no test queries", f + 1);
            continue;
        }
        let ndcg = offline_performance(&checkpoint.scorer, &checkpoint.parameters, test, &metrics);
        println!(
            "fold {}: ndcg@10 {ndcg:.4} over {} queries",
            f + 1,
            test.len()
        );
    }
    Ok(())
}
