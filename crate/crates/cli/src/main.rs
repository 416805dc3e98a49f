use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ust::bench::{discover_datasets, run_benchmark, BenchmarkConfig, ExtractionOverrides};
use ust::classify::{evaluate, TreeParams, UncertainFeatureMatrix};
use ust::series::{
    dataset_std, default_uncertainty_path, inject_noise_with_sigma, load_dataset, save_dataset,
    split_seed, Split, UncertainDataset,
};
use ust::shapelet::{
    extract_shapelets, load_shapelets, save_shapelets, shapelet_transform, ExtractionConfig,
};
use ust::Mode;

/// Uncertain shapelet transform: noise injection, shapelet extraction,
/// transform, classification and benchmarking.
#[derive(Parser)]
#[command(name = "ust", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add Gaussian noise to a certain dataset and record |noise| as its uncertainty.
    AddNoise(AddNoiseArgs),
    /// Extract the top-k shapelets of a training set into a JSON file.
    Extract(ExtractArgs),
    /// Compute shapelet distances for a dataset into a feature CSV.
    Transform(TransformArgs),
    /// Train a decision tree on training features and score it on test features.
    Classify(ClassifyArgs),
    /// Run every mode on a directory of datasets and write a CSV report.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct AddNoiseArgs {
    /// Values file of a certain dataset.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Split whose noise stream is drawn from the master seed.
    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,
    /// Fixed noise standard deviation.
    #[arg(long, conflicts_with = "sigma_from")]
    sigma: Option<f64>,
    /// Use the pooled standard deviation of this values file (e.g. the
    /// training split when noising a test split). Default: the input itself.
    #[arg(long)]
    sigma_from: Option<PathBuf>,
    /// Output values file.
    #[arg(long)]
    out: PathBuf,
    /// Output uncertainty file (default: NAME.unc.tsv next to --out).
    #[arg(long)]
    out_unc: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractionArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
}

impl ExtractionArgs {
    fn overrides(&self) -> ExtractionOverrides {
        ExtractionOverrides {
            min_len: self.min_len,
            max_len: self.max_len,
            k: self.k,
            stride: self.stride,
        }
    }
}

#[derive(Args)]
struct TreeArgs {
    /// Maximum tree depth (default: unlimited).
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
}

impl TreeArgs {
    fn params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Training values file.
    #[arg(long)]
    train: PathBuf,
    /// Training uncertainty file (default: NAME.unc.tsv if present).
    #[arg(long)]
    train_unc: Option<PathBuf>,
    #[arg(long, default_value = "ust-flat", value_parser = parse_mode)]
    mode: Mode,
    #[command(flatten)]
    extraction: ExtractionArgs,
    /// Output shapelet JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    /// Values file of the dataset to transform.
    #[arg(long)]
    data: PathBuf,
    /// Uncertainty file (default: NAME.unc.tsv if present).
    #[arg(long)]
    data_unc: Option<PathBuf>,
    #[arg(long)]
    shapelets: PathBuf,
    #[arg(long, default_value = "ust-flat", value_parser = parse_mode)]
    mode: Mode,
    /// Output feature CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    train_features: PathBuf,
    #[arg(long)]
    test_features: PathBuf,
    #[arg(long, default_value = "ust-flat", value_parser = parse_mode)]
    mode: Mode,
    #[command(flatten)]
    tree: TreeArgs,
    /// Write predicted labels, one per line.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fitted model as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Directory holding one NAME/NAME_TRAIN.tsv, NAME/NAME_TEST.tsv pair per dataset.
    #[arg(long)]
    data_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "st,ust-flat,ust-gauss", value_parser = parse_mode)]
    modes: Vec<Mode>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    extraction: ExtractionArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Use the data as given instead of injecting noise.
    #[arg(long)]
    no_noise: bool,
    /// Leave the timing columns empty so reports are byte-reproducible.
    #[arg(long)]
    no_timings: bool,
    /// Report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Win/tie/loss CSV (default: NAME.summary.csv next to --out).
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: ust::UstError| e.to_string())
}

fn uncertainty_path(values: &Path, explicit: Option<&Path>) -> Option<PathBuf> {
    match explicit {
        Some(p) => Some(p.to_path_buf()),
        None => {
            let p = default_uncertainty_path(values);
            p.exists().then_some(p)
        }
    }
}

fn load(values: &Path, unc: Option<&Path>) -> Result<UncertainDataset> {
    let unc = uncertainty_path(values, unc);
    Ok(load_dataset(values, unc.as_deref())?)
}

fn load_for_mode(mode: Mode, values: &Path, unc: Option<&Path>) -> Result<UncertainDataset> {
    let data = load(values, unc)?;
    if mode == Mode::St && !data.is_certain() {
        log::warn!(
            "mode st uses best estimates only; uncertainties in {} are ignored",
            values.display()
        );
    }
    Ok(mode.prepare(&data))
}

fn add_noise(args: &AddNoiseArgs) -> Result<()> {
    let data = load(&args.input, None)?;
    let sigma = match (&args.sigma, &args.sigma_from) {
        (Some(s), _) => {
            if !(s.is_finite() && *s > 0.0) {
                bail!("--sigma must be finite and > 0, got {s}");
            }
            *s
        }
        (None, Some(path)) => dataset_std(&load(path, None)?),
        (None, None) => dataset_std(&data),
    };
    let split = match args.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let noisy = inject_noise_with_sigma(&data, split_seed(args.seed, split), sigma)?;
    let out_unc = args
        .out_unc
        .clone()
        .unwrap_or_else(|| default_uncertainty_path(&args.out));
    save_dataset(&noisy, &args.out, &out_unc)?;
    log::info!("sigma = {sigma}; wrote {} and {}", args.out.display(), out_unc.display());
    Ok(())
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let train = load_for_mode(args.mode, &args.train, args.train_unc.as_deref())?;
    let config: ExtractionConfig = args.extraction.overrides().apply(&train);
    let shapelets = extract_shapelets(&train, &config)?;
    save_shapelets(&shapelets, &args.out)?;
    println!("extracted {} shapelets", shapelets.len());
    Ok(())
}

fn transform(args: &TransformArgs) -> Result<()> {
    let data = load_for_mode(args.mode, &args.data, args.data_unc.as_deref())?;
    let shapelets = load_shapelets(&args.shapelets)?;
    let features = shapelet_transform(&data, &shapelets)?;
    features.save_csv(&args.out)?;
    Ok(())
}

fn classify(args: &ClassifyArgs) -> Result<()> {
    let train = UncertainFeatureMatrix::load_csv(&args.train_features)?;
    let test = UncertainFeatureMatrix::load_csv(&args.test_features)?;
    if train.k() != test.k() {
        bail!("train features have {} columns but test features have {}", train.k(), test.k());
    }
    if args.mode == Mode::St {
        let uncertain = [&train, &test]
            .iter()
            .any(|f| f.rows().iter().any(|r| r.iter().any(|v| v.uncertainty() != 0.0)));
        if uncertain {
            log::warn!("mode st uses best estimates only; feature uncertainties are ignored");
        }
    }
    let model = args.mode.fit(&train, args.tree.params())?;
    let predictions = model.predict(&test)?;
    let accuracy = evaluate(&predictions, test.labels())?;
    if let Some(path) = &args.out {
        let text: String = predictions.iter().map(|l| format!("{l}\n")).collect();
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.model_out {
        model.save(path)?;
    }
    println!("accuracy\t{accuracy}");
    Ok(())
}

fn benchmark(args: &BenchmarkArgs) -> Result<bool> {
    let datasets = discover_datasets(&args.data_dir)?;
    let config = BenchmarkConfig {
        seed: args.seed,
        modes: args.modes.clone(),
        extraction: args.extraction.overrides(),
        tree: args.tree.params(),
        inject_noise: !args.no_noise,
        record_timings: !args.no_timings,
    };
    let report = run_benchmark(&datasets, &config);
    fs::write(&args.out, report.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let summary = args.summary.clone().unwrap_or_else(|| {
        let stem = args.out.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        args.out.with_file_name(format!("{stem}.summary.csv"))
    });
    fs::write(&summary, report.summary_csv())
        .with_context(|| format!("writing {}", summary.display()))?;

    let mut out = std::io::stdout().lock();
    for row in &report.rows {
        match (&row.accuracy, &row.error) {
            (Some(acc), _) => writeln!(out, "{:<24} {:<10} {acc:.4}", row.dataset, row.mode)?,
            (None, Some(e)) => writeln!(out, "{:<24} {:<10} error: {e}", row.dataset, row.mode)?,
            (None, None) => {}
        }
    }
    for s in &report.summaries {
        writeln!(
            out,
            "{} vs {}: {} wins, {} ties, {} losses",
            s.mode_a, s.mode_b, s.wins, s.ties, s.losses
        )?;
    }
    Ok(!report.all_failed())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::AddNoise(a) => add_noise(a).map(|_| true),
        Command::Extract(a) => extract(a).map(|_| true),
        Command::Transform(a) => transform(a).map(|_| true),
        Command::Classify(a) => classify(a).map(|_| true),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            let level = match record.level() {
                log::Level::Warn => "warning".to_string(),
                l => l.to_string().to_lowercase(),
            };
            writeln!(buf, "{level}: {}", record.args())
        })
        .init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: every dataset failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
