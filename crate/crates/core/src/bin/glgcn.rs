//! `glgcn` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use glgcn::bench::{run_bench, BenchSpec, ALPHA_GRID, LAMBDA_GRID};
use glgcn::data_io::{load_checkpoint_expecting, load_dataset, save_checkpoint, six_node_fixture, FixtureSpec};
use glgcn::graph::LabelPropagation;
use glgcn::loss_grad::LabelRegTarget;
use glgcn::optim_train::{
    gradcheck, gradcheck_config, select_lambda, train, train_seeds, FeatureRegGraph, Prepared, SimilarityKind,
    TrainConfig,
};
use glgcn::report::{EvalReport, GradCheckEntry, GradCheckSuiteReport, LambdaSearchReport, RunReport, SCHEMA_VERSION};
use glgcn::{Dataset, Split, Variant};

/// Environment variable naming a directory that holds dataset directories.
const DATA_DIR_ENV: &str = "GLGCN_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "glgcn",
    version,
    about = "Graph-Laplacian-regularized GCNs for node classification"
)]
struct Cli {
    /// More progress output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per seed and report accuracies.
    Train(TrainArgs),
    /// Evaluate a saved checkpoint on a split.
    Eval(EvalArgs),
    /// Compare analytic gradients with central differences on the built-in six-node graph.
    Gradcheck(GradcheckArgs),
    /// Accuracy table over datasets and methods.
    Bench(BenchArgs),
    /// Validation-based grid search over λ and α.
    LambdaSearch(LambdaSearchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Markdown,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format [default: json for train/eval/lambda-search, text for gradcheck, markdown for bench].
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn nonneg(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite number >= 0, got {s}"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match nonneg(s)? {
        v if v > 0.0 => Ok(v),
        _ => Err("must be > 0".into()),
    }
}

fn rate(s: &str) -> Result<f64, String> {
    match nonneg(s)? {
        v if v < 1.0 => Ok(v),
        _ => Err(format!("must lie in [0, 1), got {s}")),
    }
}

/// Training configuration; every field of the library's `TrainConfig`.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Model variant: gcn, glgcn-f, glgcn-l or glgcn-fl.
    #[arg(long, default_value_t = Variant::Gcn)]
    variant: Variant,
    /// Weight of the label-side Laplacian term [default: 0.01].
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg)]
    lambda_label: Option<f64>,
    /// Weight of the feature-side Laplacian term [default: 0.01].
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg)]
    lambda_feature: Option<f64>,
    /// Set both λ weights at once.
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg, conflicts_with_all = ["lambda_label", "lambda_feature"])]
    lambda: Option<f64>,
    /// Cross-class weight in the label-correlation matrix.
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg, default_value_t = TrainConfig::default().alpha)]
    alpha: f64,
    /// Graph for the feature term: similarity (S) or correlation (C).
    #[arg(long, default_value_t = FeatureRegGraph::Similarity)]
    feature_reg_graph: FeatureRegGraph,
    /// How S is built: adjacency or knn.
    #[arg(long, default_value_t = SimilarityKind::Adjacency)]
    similarity: SimilarityKind,
    /// Degree-normalize S built from the adjacency.
    #[arg(long)]
    normalize_similarity: bool,
    /// Neighbours per node for the kNN similarity graph.
    #[arg(long, default_value_t = TrainConfig::default().knn_k)]
    knn_k: usize,
    /// Gaussian kernel width for the kNN similarity graph.
    #[arg(long, allow_negative_numbers = true, value_parser = positive, default_value_t = TrainConfig::default().knn_sigma)]
    knn_sigma: f64,
    /// What the label term smooths: probabilities or logits.
    #[arg(long, default_value_t = LabelRegTarget::Probabilities)]
    label_reg_target: LabelRegTarget,
    /// Hidden layer (1-based) for the feature term [default: last].
    #[arg(long)]
    feature_layer: Option<usize>,
    /// Hidden layer widths, comma-separated.
    #[arg(long = "hidden", value_delimiter = ',', default_value = "16")]
    hidden_dims: Vec<usize>,
    /// Dropout rate on layer inputs.
    #[arg(long = "dropout", allow_negative_numbers = true, value_parser = rate, default_value_t = TrainConfig::default().dropout_rate)]
    dropout_rate: f64,
    /// Adam learning rate.
    #[arg(long = "lr", allow_negative_numbers = true, value_parser = nonneg, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    /// L2 coefficient on the first-layer weights.
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg, default_value_t = TrainConfig::default().weight_decay)]
    weight_decay: f64,
    /// Maximum training epochs.
    #[arg(long = "epochs", default_value_t = TrainConfig::default().max_epochs)]
    max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    patience: usize,
    /// Seed for initialization and dropout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds to run: a count N (seeds 0..N) or a comma-separated list. Overrides --seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Add a bias row to every layer.
    #[arg(long)]
    bias: bool,
    /// Keep raw features instead of scaling rows to unit L1 norm.
    #[arg(long)]
    raw_features: bool,
}

impl ConfigArgs {
    fn lambdas_pinned(&self) -> bool {
        self.lambda.is_some() || self.lambda_label.is_some() || self.lambda_feature.is_some()
    }

    fn config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            variant: self.variant,
            lambda_label: self.lambda.or(self.lambda_label).unwrap_or(d.lambda_label),
            lambda_feature: self.lambda.or(self.lambda_feature).unwrap_or(d.lambda_feature),
            alpha: self.alpha,
            feature_reg_graph: self.feature_reg_graph,
            similarity: self.similarity,
            normalize_similarity: self.normalize_similarity,
            knn_k: self.knn_k,
            knn_sigma: self.knn_sigma,
            label_reg_target: self.label_reg_target,
            feature_layer: self.feature_layer,
            hidden_dims: self.hidden_dims.clone(),
            dropout_rate: self.dropout_rate,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            bias: self.bias,
            normalize_features: !self.raw_features,
        }
    }

    fn seed_list(&self) -> Result<Vec<u64>, CliError> {
        match &self.seeds {
            None => Ok(vec![self.seed]),
            Some(s) => parse_seeds(s),
        }
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("--seeds expects a count or a comma-separated list, got {s:?}"));
    if s.contains(',') {
        let seeds = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        if seeds.is_empty() {
            return Err(bad());
        }
        Ok(seeds)
    } else {
        match s.trim().parse::<u64>() {
            Ok(0) | Err(_) => Err(bad()),
            Ok(n) => Ok((0..n).collect()),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory, a name under $GLGCN_DATA_DIR or ./data, or builtin:sbm2 / builtin:six-node.
    #[arg(long)]
    dataset: String,
    #[command(flatten)]
    config: ConfigArgs,
    /// Save the best parameters (single seed only).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: String,
    /// Checkpoint written by `train --checkpoint`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// train, val or test.
    #[arg(long, default_value_t = Split::Test)]
    split: Split,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Check only these variants (repeatable) [default: all four].
    #[arg(long)]
    variant: Vec<Variant>,
    /// Central-difference step.
    #[arg(long, allow_negative_numbers = true, value_parser = positive, default_value_t = 1e-5)]
    epsilon: f64,
    /// Pass threshold on the maximum relative error.
    #[arg(long, allow_negative_numbers = true, value_parser = positive, default_value_t = 1e-5)]
    threshold: f64,
    /// Seed of the Glorot initialization being checked.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Datasets, comma-separated (resolved like --dataset).
    #[arg(long, value_delimiter = ',', default_value = "cora,citeseer,pubmed")]
    datasets: Vec<String>,
    /// Variants to train, comma-separated [default: all four].
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    /// λ grid for validation-based selection.
    #[arg(long, value_delimiter = ',', value_parser = nonneg)]
    lambda_grid: Vec<f64>,
    /// α grid, used with --feature-reg-graph correlation.
    #[arg(long, value_delimiter = ',', value_parser = nonneg)]
    alpha_grid: Vec<f64>,
    /// Leave out the label-propagation row.
    #[arg(long)]
    no_lp: bool,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LambdaSearchArgs {
    #[arg(long)]
    dataset: String,
    /// λ grid.
    #[arg(long, value_delimiter = ',', value_parser = nonneg)]
    lambda_grid: Vec<f64>,
    /// α grid, used with --feature-reg-graph correlation.
    #[arg(long, value_delimiter = ',', value_parser = nonneg)]
    alpha_grid: Vec<f64>,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    Runtime(glgcn::Error),
}

impl From<glgcn::Error> for CliError {
    fn from(e: glgcn::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn validated(config: TrainConfig) -> Result<TrainConfig, CliError> {
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn resolve_dataset(spec: &str) -> Result<Dataset, glgcn::Error> {
    match spec {
        "builtin:sbm2" => return FixtureSpec::default().build(),
        "builtin:six-node" => return Ok(six_node_fixture()),
        _ => {}
    }
    let direct = Path::new(spec);
    if direct.is_dir() {
        return load_dataset(direct);
    }
    let mut candidates = Vec::new();
    if let Some(root) = std::env::var_os(DATA_DIR_ENV) {
        candidates.push(PathBuf::from(root).join(spec));
    }
    candidates.push(Path::new("data").join(spec));
    match candidates.into_iter().find(|p| p.is_dir()) {
        Some(dir) => load_dataset(dir),
        None => Err(glgcn::Error::MissingFile {
            path: direct.to_path_buf(),
        }),
    }
}

fn emit<T: Serialize>(
    output: &OutputArgs,
    default: Format,
    report: &T,
    text: impl FnOnce() -> String,
    markdown: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let rendered = match output.format.unwrap_or(default) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => text(),
        Format::Markdown => markdown(),
    };
    match &output.out {
        Some(path) => fs::write(path, rendered).map_err(|source| {
            CliError::Runtime(glgcn::Error::Io {
                path: path.clone(),
                source,
            })
        }),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, CliError> {
    let config = validated(args.config.config())?;
    let seeds = args.config.seed_list()?;
    if args.checkpoint.is_some() && seeds.len() != 1 {
        return Err(CliError::Usage("--checkpoint needs exactly one seed".into()));
    }
    let dataset = resolve_dataset(&args.dataset)?;
    log::info!(
        "{}: {} nodes, {} classes, {} train / {} val / {} test",
        dataset.name,
        dataset.num_nodes(),
        dataset.num_classes(),
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len()
    );
    let runs = if let Some(path) = &args.checkpoint {
        let cfg = TrainConfig {
            seed: seeds[0],
            ..config
        };
        let (params, report) = train(&dataset, &cfg)?;
        save_checkpoint(&params, &cfg, path)?;
        vec![report]
    } else {
        train_seeds(&dataset, &config, &seeds)?
    };
    let report = RunReport::new(&dataset.name, runs);
    emit(
        &args.output,
        Format::Json,
        &report,
        || report.render_text(),
        || report.render_markdown(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, CliError> {
    let dataset = resolve_dataset(&args.dataset)?;
    let header = glgcn::data_io::load_checkpoint(&args.checkpoint)?;
    let dims = header.config.layer_dims(&dataset);
    let ck = load_checkpoint_expecting(&args.checkpoint, &dims)?;
    let prepared = Prepared::new(&dataset, &ck.config)?;
    let accuracy = prepared.evaluate(&ck.params, &dataset, args.split)?;
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset.name.clone(),
        split: args.split,
        accuracy,
        nodes: dataset.split(args.split).len(),
        config: ck.config,
    };
    emit(
        &args.output,
        Format::Json,
        &report,
        || report.render_text(),
        || report.render_markdown(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<ExitCode, CliError> {
    let variants = if args.variant.is_empty() {
        Variant::ALL.to_vec()
    } else {
        args.variant.clone()
    };
    let dataset = six_node_fixture();
    let mut checks = Vec::new();
    for variant in variants {
        let config = TrainConfig {
            seed: args.seed,
            ..gradcheck_config(variant)
        };
        let result = gradcheck(&dataset, &config, args.epsilon)?;
        checks.push(GradCheckEntry {
            variant,
            config,
            epsilon: args.epsilon,
            result,
        });
    }
    let report = GradCheckSuiteReport::new(args.threshold, checks);
    emit(
        &args.output,
        Format::Text,
        &report,
        || report.render_text(),
        || report.render_markdown(),
    )?;
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    let base = validated(args.config.config())?;
    let seeds = match &args.config.seeds {
        Some(s) => parse_seeds(s)?,
        None => (0..10).collect(),
    };
    let mut datasets = Vec::new();
    let mut skipped = Vec::new();
    for name in &args.datasets {
        match resolve_dataset(name) {
            Ok(d) => datasets.push(d),
            Err(e) => {
                log::warn!("skipping dataset {name}: {e}");
                skipped.push(name.clone());
            }
        }
    }
    if datasets.is_empty() {
        return Err(CliError::Runtime(glgcn::Error::InvalidArgument(
            "no requested dataset could be loaded".into(),
        )));
    }
    let spec = BenchSpec {
        base,
        variants: if args.variants.is_empty() {
            Variant::ALL.to_vec()
        } else {
            args.variants.clone()
        },
        seeds,
        lambda_grid: non_empty_or(&args.lambda_grid, &LAMBDA_GRID),
        alpha_grid: non_empty_or(&args.alpha_grid, &ALPHA_GRID),
        pin_lambda: args.config.lambdas_pinned(),
        include_lp: !args.no_lp,
        lp: LabelPropagation::default(),
    };
    let report = run_bench(&datasets, skipped, &spec)?;
    emit(
        &args.output,
        Format::Markdown,
        &report,
        || report.render_text(),
        || report.render_markdown(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn non_empty_or(given: &[f64], default: &[f64]) -> Vec<f64> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn cmd_lambda_search(args: LambdaSearchArgs) -> Result<ExitCode, CliError> {
    let base = validated(args.config.config())?;
    let dataset = resolve_dataset(&args.dataset)?;
    let search = select_lambda(
        &dataset,
        &base,
        &non_empty_or(&args.lambda_grid, &LAMBDA_GRID),
        &non_empty_or(&args.alpha_grid, &ALPHA_GRID),
    )?;
    let report = LambdaSearchReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset.name.clone(),
        search,
    };
    emit(
        &args.output,
        Format::Json,
        &report,
        || report.render_text(),
        || report.render_markdown(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Bench(a) => cmd_bench(a),
        Command::LambdaSearch(a) => cmd_lambda_search(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
