//! `ensclust` command-line front end.

mod adhoc;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ensclust::pipeline::{
    load_months, load_partitions, run_drift, run_pipeline, run_stability, write_synthetic, OutputDir, RunConfig, SynthRequest,
};
use ensclust::clusterers::GridProfile;

/// Environment variable that overrides the output directory of every command.
pub const OUT_ENV: &str = "ENSCLUST_OUT";

#[derive(Parser)]
#[command(name = "ensclust", version, about = "Ensemble clustering pipeline for mixed-type monthly data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic monthly tables, truth labels and a matching config.
    Synth(SynthArgs),
    /// Run the full clustering pipeline for every configured month.
    Pipeline(PipelineArgs),
    /// Match clusters across months from pipeline partitions.
    Stability(StabilityArgs),
    /// Cohort drift of category interests across months.
    Drift(CommonArgs),
    /// Evaluate validity metrics on label files.
    Metrics(adhoc::MetricsArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    months: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows drawn as background noise, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Clusters whose signature recurs in every month.
    #[arg(long, default_value_t = 1)]
    preserved: usize,
    #[arg(long, default_value_t = 4.0)]
    separation: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; beats the environment override and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every logical core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, value_parser = ["small", "full"])]
    grid: Option<String>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    threshold: Option<f64>,
    /// Comma-separated features left out of the profiles.
    #[arg(long, value_delimiter = ',')]
    exclude_features: Option<Vec<String>>,
    /// Strategy column of the partition files, e.g. `HM-Stg1`.
    #[arg(long)]
    strategy: Option<String>,
    /// Directory holding the pipeline partitions; defaults to the output directory.
    #[arg(long)]
    partitions: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input; nothing was computed.
    Input(String),
    /// A computation stage failed.
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// `--out`, then the environment variable, then the fallback.
pub fn output_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => fallback.to_path_buf(),
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut cfg: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    cfg.resolve_paths(base);
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.output = output_dir(args.out.as_deref(), &cfg.output);
    Ok(cfg)
}

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let mut req = SynthRequest::new(a.months, a.k, a.n, a.seed);
    req.spec.base.noise_fraction = a.noise;
    req.spec.base.separation = a.separation;
    req.spec.preserved = a.preserved;
    req.spec.validate().map_err(input)?;
    let dir = output_dir(a.out.as_deref(), Path::new("synth-data"));
    let out = OutputDir::create(&dir, req.hash()).map_err(input)?;
    let files = write_synthetic(&req, &out).map_err(compute)?;
    let toml = toml::to_string(&files.config).map_err(compute)?;
    std::fs::write(out.path("config.toml"), format!("# config-hash: {}\n{toml}", req.hash())).map_err(compute)?;
    for (t, g) in files.tables.iter().zip(&files.truths) {
        eprintln!("wrote {} and {}", t.display(), g.display());
    }
    eprintln!("wrote {}", out.path("config.toml").display());
    Ok(())
}

fn pipeline(a: &PipelineArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.common)?;
    if let Some(n) = a.sample_size {
        cfg.sampling.size = n;
    }
    if let Some(g) = &a.grid {
        cfg.grid = if g == "full" { GridProfile::Full } else { GridProfile::Small };
    }
    let months = load_months(&cfg).map_err(input)?;
    let hash = cfg.hash();
    let out = OutputDir::create(&cfg.output, &hash).map_err(input)?;
    eprintln!("pipeline: {} month(s), config hash {hash}", months.len());
    let summary = run_pipeline(&cfg, &months, &out).map_err(compute)?;
    for m in &summary.months {
        match &m.result {
            Ok(r) => eprintln!("  {}: ok, metric {}, best {}", m.tag, r.selected_metric, r.ranking.rows.iter().find(|x| x.rank == 1).map(|x| x.id.to_string()).unwrap_or_default()),
            Err(f) => eprintln!("  {}: failed at {:?}: {}", m.tag, f.stage, f.error),
        }
    }
    eprintln!("reports in {}", out.root().display());
    let failed = summary.failed();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Compute(format!(
            "{} month(s) failed: {}",
            failed.len(),
            failed.iter().map(|(t, f)| format!("{t} at {:?}", f.stage)).collect::<Vec<_>>().join(", ")
        )))
    }
}

fn stability(a: &StabilityArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.common)?;
    if let Some(t) = a.threshold {
        cfg.stability.threshold = t;
    }
    if let Some(x) = &a.exclude_features {
        cfg.stability.exclude_features = x.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(s) = &a.strategy {
        cfg.stability.strategy = s.clone();
    }
    let months = load_months(&cfg).map_err(input)?;
    let strategy = cfg.stability_strategy().map_err(input)?;
    let dir = a.partitions.clone().unwrap_or_else(|| cfg.output.clone());
    let parts = load_partitions(&dir, &months, strategy).map_err(input)?;
    let out = OutputDir::create(&cfg.output, cfg.hash()).map_err(input)?;
    let s = run_stability(&cfg, &months, &parts, &out).map_err(compute)?;
    eprintln!("stability: {} of {} cluster pairs matched on {} features", s.matched(), s.matches.len(), s.features.len());
    if let Some(top) = s.recurrence.first() {
        eprintln!("  most recurrent: {} cluster {} ({} matches)", top.month, top.cluster, top.matches);
    }
    Ok(())
}

fn drift(a: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(a)?;
    if cfg.drift.is_none() {
        return Err(CliError::Input("config has no [drift] section".into()));
    }
    let months = load_months(&cfg).map_err(input)?;
    if months.len() < 2 {
        return Err(CliError::Input(format!("drift needs at least two months, got {}", months.len())));
    }
    let out = OutputDir::create(&cfg.output, cfg.hash()).map_err(input)?;
    let d = run_drift(&cfg, &months, &out).map_err(compute)?;
    eprintln!("drift: {} breakdown(s), {} cohort rows", d.reports.len(), d.reports.iter().map(|r| r.rows.len()).sum::<usize>());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Stability(a) => stability(a),
        Command::Drift(a) => drift(a),
        Command::Metrics(a) => adhoc::metrics(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Input(m) | CliError::Compute(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
