//! Command-line entry point for the telemetry power-modeling toolkit.
//!
//! Single-dataset commands (`train`, `evaluate`, `explain`, `summary`)
//! derive their sub-seeds exactly like `pipeline` does for its first
//! dataset, so their outputs match pipeline artifacts byte for byte
//! under the same settings.

use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ranwatt::config::{RunConfig, DEFAULT_DROP_COLUMNS};
use ranwatt::dataset::{compute_stats, load_dataset, split, Dataset, Matrix, SplitConfig};
use ranwatt::ensemble::{evaluate, fit_forest, fit_gboost, fit_xgboost, EnsembleModel, ModelKind};
use ranwatt::explain::{
    lime, lime_summary, shap_auto, shap_summary, Attribution, Background, GlobalSummary,
    LimeConfig, SummaryConfig,
};
use ranwatt::pipeline::run_pipeline;
use ranwatt::report::{render_instance_bars, render_summary, MetricsTables};
use ranwatt::ric::{run_session, ExplainerChoice, ServeConfig, DEFAULT_WHITELIST};
use ranwatt::rng::sub_seed;
use ranwatt::synth::{write_csv, Variant};
use ranwatt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ranwatt",
    version,
    about = "Tree-ensemble power models for RAN telemetry, with Shapley/LIME \
             attribution, SVG reports, and a closed-loop control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic telemetry capture CSV
    Synth(SynthArgs),
    /// Load a capture and print its shape, split sizes, and feature statistics
    Ingest(IngestArgs),
    /// Fit one model on the training split and save it
    Train(TrainArgs),
    /// Re-evaluate a saved model against a capture's train/test split
    Evaluate(EvaluateArgs),
    /// Explain one test instance with LIME or Shapley values
    Explain(ExplainArgs),
    /// Build a global attribution summary over sampled test instances
    Summary(SummaryArgs),
    /// Render saved attribution/summary artifacts to SVG, or print a metrics table
    Report(ReportArgs),
    /// Serve the closed-loop control simulator over stdio or TCP
    Simulate(SimulateArgs),
    /// Run the full train→evaluate→explain→report pipeline
    Pipeline(PipelineArgs),
}

/// Options shared by every command that reads a telemetry CSV.
#[derive(Args)]
struct DataOpts {
    /// Telemetry CSV file
    #[arg(long)]
    data: PathBuf,
    /// Target column (watts)
    #[arg(long, default_value = "power")]
    target: String,
    /// Columns to exclude from modeling (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DROP_COLUMNS.map(String::from))]
    drop: Vec<String>,
    /// Fraction of rows in the training split
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Global seed; sub-seeds are derived per module
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl DataOpts {
    fn load(&self) -> Result<(Dataset, usize)> {
        load_dataset(&self.data, &self.target, &self.drop)
    }

    /// Seed namespace for this capture (pipeline dataset index 0).
    fn dataset_seed(&self) -> u64 {
        sub_seed(self.seed, "dataset", 0)
    }

    fn split(&self, ds: &Dataset) -> Result<(Dataset, Dataset)> {
        split(
            ds,
            &SplitConfig {
                train_fraction: self.train_fraction,
                seed: sub_seed(self.dataset_seed(), "split", 0),
            },
        )
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Capture variant: ul (uplink only) or dlul (joint downlink/uplink)
    #[arg(long)]
    variant: String,
    #[arg(long, default_value_t = 9000)]
    rows: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataOpts,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Model kind: rf, gb, or xgb
    #[arg(long)]
    model_kind: String,
    /// Where to save the fitted model
    #[arg(long)]
    out: PathBuf,
    /// Trees in a forest
    #[arg(long)]
    n_trees: Option<usize>,
    /// Boosting stages
    #[arg(long)]
    n_stages: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    /// Candidate features per split (forest; default d/3)
    #[arg(long)]
    features_per_split: Option<usize>,
    /// Disable bootstrap resampling (forest)
    #[arg(long)]
    no_bootstrap: bool,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Row fraction drawn per boosting stage
    #[arg(long)]
    subsample: Option<f64>,
    /// L2 leaf penalty (second-order boosting)
    #[arg(long)]
    lambda: Option<f64>,
    /// Training rows embedded as the Shapley background sample
    #[arg(long, default_value_t = 100)]
    background_size: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataOpts,
    #[arg(long)]
    model: PathBuf,
    /// lime or shap
    #[arg(long)]
    explainer: String,
    /// Test-split row to explain (default: prediction nearest the median power)
    #[arg(long)]
    row: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    lime_samples: usize,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Permutation draws when sampled Shapley is auto-selected
    #[arg(long, default_value_t = 80)]
    shap_draws: usize,
    /// Write the attribution as text
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the attribution bar chart
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    #[command(flatten)]
    data: DataOpts,
    #[arg(long)]
    model: PathBuf,
    /// lime or shap
    #[arg(long)]
    explainer: String,
    /// Test rows sampled into the summary
    #[arg(long, default_value_t = 60)]
    instances: usize,
    #[arg(long, default_value_t = 5000)]
    lime_samples: usize,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 80)]
    shap_draws: usize,
    /// Write the summary as text
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the beeswarm chart (shap summaries)
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved instance attribution to render
    #[arg(long, conflicts_with_all = ["summary", "metrics_tsv"])]
    attribution: Option<PathBuf>,
    /// Saved global summary to render
    #[arg(long, conflicts_with = "metrics_tsv")]
    summary: Option<PathBuf>,
    /// Metrics TSV to print as an aligned table
    #[arg(long)]
    metrics_tsv: Option<PathBuf>,
    /// SVG output path (for --attribution / --summary)
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 880)]
    width: u32,
    #[arg(long, default_value_t = 460)]
    height: u32,
}

#[derive(Args)]
struct SimulateArgs {
    /// Saved model file (must embed stats and a background sample)
    #[arg(long)]
    model: PathBuf,
    /// lime or shap
    #[arg(long)]
    explainer: String,
    /// Serve over standard input/output
    #[arg(long, conflicts_with = "listen")]
    stdio: bool,
    /// Serve over TCP, e.g. 127.0.0.1:7878
    #[arg(long)]
    listen: Option<String>,
    /// Tunable-parameter whitelist (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_WHITELIST.map(String::from))]
    whitelist: Vec<String>,
    /// Maximum tuning targets per control message
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    shap_draws: usize,
    #[arg(long, default_value_t = 5000)]
    lime_samples: usize,
}

#[derive(Args)]
struct PipelineArgs {
    /// TOML config file; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Telemetry CSV files (comma separated; overrides the config list)
    #[arg(long, value_delimiter = ',')]
    data: Vec<PathBuf>,
    /// Artifact output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

fn main() {
    if let Err(e) = run() {
        // A reader that closes our stdout early (e.g. `ranwatt ... | head`)
        // is not a failure of the command itself.
        if let Error::Io(ioe) = &e {
            if ioe.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => cmd_synth(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Summary(args) => cmd_summary(args),
        Command::Report(args) => cmd_report(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let variant = Variant::parse(&args.variant)?;
    write_csv(&args.out, variant, args.rows, args.seed)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "wrote {} rows of the {} capture to {}",
        args.rows,
        variant.tag(),
        args.out.display()
    )?;
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let (ds, dropped) = args.data.load()?;
    let (train, test) = args.data.split(&ds)?;
    let stats = compute_stats(&train)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "capture {} ({})\nrows: {} ({} dropped), features: {}, train: {}, test: {}\n",
        ds.source_tag(),
        args.data.data.display(),
        ds.n_rows(),
        dropped,
        ds.n_features(),
        train.n_rows(),
        test.n_rows()
    )?;
    let name_w = ds
        .feature_names()
        .iter()
        .map(|n| n.len())
        .max()
        .unwrap_or(7)
        .max("feature".len());
    writeln!(
        out,
        "{:<name_w$}  {:>12}  {:>12}  {:>12}  {:>12}",
        "feature", "mean", "std", "min", "max"
    )?;
    for (name, stat) in ds.feature_names().iter().zip(stats.iter()) {
        writeln!(
            out,
            "{name:<name_w$}  {:>12.5}  {:>12.5}  {:>12.5}  {:>12.5}",
            stat.mean, stat.std, stat.min, stat.max
        )?;
    }
    Ok(())
}

/// Applies per-model CLI overrides onto the default settings.
fn train_config(args: &TrainArgs, kind: ModelKind) -> RunConfig {
    let mut config = RunConfig::default();
    match kind {
        ModelKind::Forest => {
            let f = &mut config.forest;
            if let Some(v) = args.n_trees {
                f.n_trees = v;
            }
            if let Some(v) = args.max_depth {
                f.max_depth = v;
            }
            if let Some(v) = args.min_samples_leaf {
                f.min_samples_leaf = v;
            }
            if args.features_per_split.is_some() {
                f.features_per_split = args.features_per_split;
            }
            if args.no_bootstrap {
                f.bootstrap = false;
            }
        }
        ModelKind::GBoost | ModelKind::XGBoost => {
            let b = match kind {
                ModelKind::GBoost => &mut config.gboost,
                _ => &mut config.xgboost,
            };
            if let Some(v) = args.n_stages {
                b.n_stages = v;
            }
            if let Some(v) = args.max_depth {
                b.max_depth = v;
            }
            if let Some(v) = args.min_samples_leaf {
                b.min_samples_leaf = v;
            }
            if let Some(v) = args.learning_rate {
                b.learning_rate = v;
            }
            if let Some(v) = args.subsample {
                b.subsample = v;
            }
            if let Some(v) = args.lambda {
                b.lambda = v;
            }
        }
    }
    config
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let kind = ModelKind::parse(&args.model_kind)?;
    let (ds, _) = args.data.load()?;
    let (train, test) = args.data.split(&ds)?;
    let config = train_config(&args, kind);
    let ds_seed = args.data.dataset_seed();
    let model_seed = sub_seed(ds_seed, kind.tag(), 0);
    let mut model = match kind {
        ModelKind::Forest => fit_forest(&train, &config.forest_params(ds.n_features(), model_seed))?,
        ModelKind::GBoost => fit_gboost(&train, &config.gboost_params(model_seed))?,
        ModelKind::XGBoost => fit_xgboost(&train, &config.xgboost_params(model_seed))?,
    };
    let stats = compute_stats(&train)?;
    let background = Background::sample_from(
        train.features(),
        args.background_size,
        sub_seed(ds_seed, "background", 0),
    )?;
    model.set_explain_context(stats, background.matrix().clone())?;
    model.save(&args.out)?;

    let metrics = evaluate(&model, &train, &test)?;
    let tables = ranwatt::report::emit_metrics_table(&[(kind, metrics)])?;
    let mut out = std::io::stdout().lock();
    write!(out, "{}", tables.aligned)?;
    writeln!(out, "\nmodel saved to {}", args.out.display())?;
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = EnsembleModel::load(&args.model)?;
    let (ds, _) = args.data.load()?;
    let (train, test) = args.data.split(&ds)?;
    let metrics = evaluate(&model, &train, &test)?;
    let tables = ranwatt::report::emit_metrics_table(&[(model.kind(), metrics)])?;
    write!(std::io::stdout().lock(), "{}", tables.aligned)?;
    Ok(())
}

/// Position of a model kind in the pipeline's fitting order, which
/// namespaces per-model explanation seeds.
fn model_index(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::GBoost => 0,
        ModelKind::Forest => 1,
        ModelKind::XGBoost => 2,
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn write_artifact(path: &Option<PathBuf>, content: &str, label: &str) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, content)?;
        writeln!(std::io::stdout().lock(), "{label} written to {}", path.display())?;
    }
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<()> {
    let model = EnsembleModel::load(&args.model)?;
    let (ds, _) = args.data.load()?;
    let (_, test) = args.data.split(&ds)?;
    if ds.feature_names() != model.feature_names() {
        return Err(Error::invalid(
            "dataset schema does not match the model's feature list",
        ));
    }
    let row = match args.row {
        Some(idx) => {
            if idx >= test.n_rows() {
                return Err(Error::invalid(format!(
                    "row {idx} is out of range (test split has {} rows)",
                    test.n_rows()
                )));
            }
            idx
        }
        None => {
            let median_power = median(ds.target());
            let mut best = 0;
            let mut best_gap = f64::INFINITY;
            for i in 0..test.n_rows() {
                let gap = (model.predict(test.features().row(i))? - median_power).abs();
                if gap < best_gap {
                    best_gap = gap;
                    best = i;
                }
            }
            best
        }
    };
    let x = test.features().row(row);
    let ds_seed = args.data.dataset_seed();
    let mi = model_index(model.kind());

    let attribution = match args.explainer.as_str() {
        "lime" => {
            let stats = model
                .stats()
                .ok_or_else(|| Error::invalid("model carries no feature statistics"))?;
            let config = LimeConfig {
                n_samples: args.lime_samples,
                top_k: args.top_k,
                ..LimeConfig::new(sub_seed(ds_seed, "lime-instance", mi))
            };
            lime(&model, model.feature_names(), x, stats, &config)?.attribution
        }
        "shap" => {
            let bg = model
                .background()
                .ok_or_else(|| Error::invalid("model carries no background sample"))?;
            let background = Background::new(bg.clone())?;
            shap_auto(
                &model,
                model.feature_names(),
                x,
                &background,
                args.shap_draws,
                sub_seed(ds_seed, "shap-instance", mi),
            )?
        }
        other => {
            return Err(Error::parse(format!(
                "unknown explainer {other:?} (expected lime or shap)"
            )))
        }
    };

    {
        let mut out = std::io::stdout().lock();
        writeln!(out, "test row {row}")?;
        write!(out, "{}", attribution.to_text())?;
    }
    write_artifact(&args.out, &attribution.to_text(), "attribution")?;
    if args.svg.is_some() {
        let svg = render_instance_bars(&attribution, 880, 460)?;
        write_artifact(&args.svg, &svg, "chart")?;
    }
    Ok(())
}

fn sample_instances(test: &Dataset, count: usize, ds_seed: u64) -> Matrix {
    let feats = test.features();
    if count >= feats.n_rows() {
        feats.clone()
    } else {
        let mut rng = ranwatt::rng::stream(ds_seed, "summary-rows", 0);
        let mut idx = ranwatt::rng::sample_without_replacement(&mut rng, feats.n_rows(), count);
        idx.sort_unstable();
        feats.select_rows(&idx)
    }
}

fn cmd_summary(args: SummaryArgs) -> Result<()> {
    let model = EnsembleModel::load(&args.model)?;
    let (ds, _) = args.data.load()?;
    let (_, test) = args.data.split(&ds)?;
    if ds.feature_names() != model.feature_names() {
        return Err(Error::invalid(
            "dataset schema does not match the model's feature list",
        ));
    }
    let ds_seed = args.data.dataset_seed();
    let mi = model_index(model.kind());
    let instances = sample_instances(&test, args.instances, ds_seed);

    let summary: GlobalSummary = match args.explainer.as_str() {
        "lime" => {
            let stats = model
                .stats()
                .ok_or_else(|| Error::invalid("model carries no feature statistics"))?;
            let config = LimeConfig {
                n_samples: args.lime_samples,
                top_k: args.top_k,
                ..LimeConfig::new(sub_seed(ds_seed, "lime-summary", mi))
            };
            lime_summary(&model, model.feature_names(), &instances, stats, &config)?
        }
        "shap" => {
            let bg = model
                .background()
                .ok_or_else(|| Error::invalid("model carries no background sample"))?;
            let background = Background::new(bg.clone())?;
            shap_summary(
                &model,
                model.feature_names(),
                &instances,
                &background,
                &SummaryConfig {
                    sampled_draws: args.shap_draws,
                    seed: sub_seed(ds_seed, "shap-summary", mi),
                },
            )?
        }
        other => {
            return Err(Error::parse(format!(
                "unknown explainer {other:?} (expected lime or shap)"
            )))
        }
    };

    write!(std::io::stdout().lock(), "{}", summary.to_text())?;
    write_artifact(&args.out, &summary.to_text(), "summary")?;
    if args.svg.is_some() {
        let svg = render_summary(&summary, 900, 560)?;
        write_artifact(&args.svg, &svg, "chart")?;
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if let Some(path) = &args.attribution {
        let attr = Attribution::from_text(&std::fs::read_to_string(path)?)?;
        let svg = render_instance_bars(&attr, args.width, args.height)?;
        let target = args
            .svg
            .ok_or_else(|| Error::invalid("--attribution needs --svg <path>"))?;
        std::fs::write(&target, svg)?;
        writeln!(out, "chart written to {}", target.display())?;
    } else if let Some(path) = &args.summary {
        let summary = GlobalSummary::from_text(&std::fs::read_to_string(path)?)?;
        let svg = render_summary(&summary, args.width.max(400), args.height)?;
        let target = args
            .svg
            .ok_or_else(|| Error::invalid("--summary needs --svg <path>"))?;
        std::fs::write(&target, svg)?;
        writeln!(out, "chart written to {}", target.display())?;
    } else if let Some(path) = &args.metrics_tsv {
        let tables = MetricsTables::from_structured(&std::fs::read_to_string(path)?)?;
        write!(out, "{}", tables.aligned)?;
    } else {
        return Err(Error::invalid(
            "pass one of --attribution, --summary, or --metrics-tsv",
        ));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let model = EnsembleModel::load(&args.model)?;
    let config = ServeConfig {
        explainer: ExplainerChoice::parse(&args.explainer)?,
        whitelist: args.whitelist.clone(),
        max_targets: args.top_k,
        seed: args.seed,
        shap_draws: args.shap_draws,
        lime_samples: args.lime_samples,
    };
    if let Some(addr) = &args.listen {
        let listener = TcpListener::bind(addr)
            .map_err(|e| Error::invalid(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on {addr}; one session per connection");
        for stream in listener.incoming() {
            let stream = stream?;
            let reader = BufReader::new(stream.try_clone()?);
            match run_session(&model, &config, reader, stream) {
                Ok(stats) => eprintln!(
                    "session closed: {} responses, {} errors",
                    stats.processed, stats.errors
                ),
                Err(e) => eprintln!("session failed: {e}"),
            }
        }
        Ok(())
    } else if args.stdio {
        let stdin = std::io::stdin();
        let stdout = std::io::stdout();
        let stats = run_session(&model, &config, stdin.lock(), stdout.lock())?;
        eprintln!(
            "session closed: {} responses, {} errors",
            stats.processed, stats.errors
        );
        Ok(())
    } else {
        Err(Error::invalid("pass --stdio or --listen <addr>"))
    }
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if !args.data.is_empty() {
        config.datasets = args.data.clone();
    }
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(target) = args.target {
        config.target_column = target;
    }
    if let Some(fraction) = args.train_fraction {
        config.train_fraction = fraction;
    }
    let report = run_pipeline(&config)?;
    write!(std::io::stdout().lock(), "{}", report.render_text())?;
    Ok(())
}
