use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flip_core::bench::{
    extract_patterns, heuristics_train, read_traces_jsonl, run_experiment, traces_from_csv, traces_to_csv, write_traces_jsonl, HeuristicsConfig,
    InitializerKind, Manifest, RandomInitConfig, VarianceConfig, VarianceInit,
};
use flip_core::initializer::{default_layer_dims, init_decoder, EncoderConfig, FlipInitializer, DEFAULT_DIVISOR};
use flip_core::metatrain::{train_flip, MetaConfig};
use flip_core::problems::DistributionConfig;
use flip_core::seed::rng_from_seed;
use flip_core::FlipError;
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "flip", version, about = "Train and benchmark learned initializers for parametrized circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config (for `export`, the trace file to convert)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Replaces every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (falls back to FLIP_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Meta-train a decoder; writes checkpoint.json and train_log.jsonl
    Train,
    /// Run a test manifest; writes traces.jsonl and aggregate.csv
    Test,
    /// Gradient-variance diagnostic; writes variance.csv
    Diagnose,
    /// Train the heuristics baseline; writes heuristics.json
    Baseline,
    /// Decoded QAOA angle patterns; writes patterns.csv
    Patterns,
    /// Convert traces between JSONL and CSV
    Export,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(String),
    Capacity(String),
}

impl From<FlipError> for CliError {
    fn from(e: FlipError) -> Self {
        match e {
            FlipError::Io(_) | FlipError::Csv(_) => CliError::Io(e.to_string()),
            FlipError::Capacity(_) => CliError::Capacity(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Capacity(m) => m,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx {
    config: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn config_path(&self) -> CliResult<&Path> {
        self.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))
    }

    fn config_dir(&self) -> PathBuf {
        self.config
            .as_deref()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }

    fn load<T: DeserializeOwned>(&self) -> CliResult<T> {
        let path = self.config_path()?;
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            CliError::Config(format!("{}: invalid config at `{at}`: {}", path.display(), e.inner()))
        })
    }

    fn create(&self, name: &str) -> CliResult<BufWriter<File>> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(BufWriter::new(f))
    }

    fn require_file(&self, p: &Path) -> CliResult<PathBuf> {
        let full = if p.is_absolute() { p.to_path_buf() } else { self.config_dir().join(p) };
        if !full.is_file() {
            return Err(CliError::Config(format!("missing file {}", full.display())));
        }
        Ok(full)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainConfig {
    distribution: DistributionConfig,
    meta: MetaConfig,
    #[serde(default)]
    init_seed: u64,
    #[serde(default = "default_divisor")]
    divisor: f64,
    /// Write an extra checkpoint every this many epochs (0 disables).
    #[serde(default)]
    checkpoint_every: usize,
}

fn default_divisor() -> f64 {
    DEFAULT_DIVISOR
}

fn cmd_train(ctx: &Ctx) -> CliResult<()> {
    let mut cfg: TrainConfig = ctx.load()?;
    if let Some(s) = ctx.seed {
        cfg.distribution.rng_seed = s;
        cfg.meta.rng_seed = s;
        cfg.init_seed = s;
    }
    cfg.meta.validate()?;
    cfg.distribution.validate()?;
    let family = cfg.distribution.family();
    let encoder = EncoderConfig::new(family, cfg.divisor)?;
    let net = init_decoder(&mut rng_from_seed(cfg.init_seed), &default_layer_dims(family)?)?;
    let mut init = FlipInitializer {
        encoder,
        net,
        rng_seed: cfg.init_seed,
    };
    let mut log_file = ctx.create("train_log.jsonl")?;
    let every = cfg.checkpoint_every;
    let log = train_flip(&cfg.meta, &cfg.distribution, &mut init, |epoch, current| {
        if every > 0 && (epoch + 1) % every == 0 {
            current.save(&ctx.out.join(format!("checkpoint_epoch_{}.json", epoch + 1)))?;
        }
        ctx.note(format!("epoch {}/{}", epoch + 1, cfg.meta.epochs));
        Ok(())
    })?;
    log.write_jsonl(&mut log_file)?;
    log_file.flush()?;
    init.save(&ctx.out.join("checkpoint.json"))?;
    if let Some(last) = log.records.last() {
        ctx.note(format!("final batch loss {:.6}", last.loss));
    }
    Ok(())
}

fn cmd_test(ctx: &Ctx) -> CliResult<()> {
    let mut manifest: Manifest = ctx.load()?;
    if let Some(s) = ctx.seed {
        manifest.seed = s;
    }
    manifest.validate()?;
    for e in &mut manifest.initializers {
        match &mut e.init {
            InitializerKind::Flip { checkpoint: p } | InitializerKind::Heuristics { model: p } => *p = ctx.require_file(p)?,
            InitializerKind::Random { .. } => {}
        }
    }
    let result = run_experiment(&manifest, &ctx.config_dir())?;
    result.write_traces(ctx.create("traces.jsonl")?)?;
    result.write_aggregate_csv(ctx.create("aggregate.csv")?)?;
    ctx.note(format!("{} traces", result.traces.len()));
    Ok(())
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DiagnoseInit {
    Random {
        #[serde(default = "neg_pi")]
        low: f64,
        #[serde(default = "pos_pi")]
        high: f64,
    },
    Flip {
        checkpoint: PathBuf,
    },
}

fn neg_pi() -> f64 {
    -std::f64::consts::PI
}

fn pos_pi() -> f64 {
    std::f64::consts::PI
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnoseConfig {
    variance: VarianceConfig,
    initializer: DiagnoseInit,
}

fn cmd_diagnose(ctx: &Ctx) -> CliResult<()> {
    let mut cfg: DiagnoseConfig = ctx.load()?;
    if let Some(s) = ctx.seed {
        cfg.variance.rng_seed = s;
    }
    let init = match cfg.initializer {
        DiagnoseInit::Random { low, high } => VarianceInit::Random(RandomInitConfig {
            low,
            high,
            rng_seed: 0,
            restarts: 1,
        }),
        DiagnoseInit::Flip { checkpoint } => VarianceInit::Flip(Box::new(FlipInitializer::load(&ctx.require_file(&checkpoint)?)?)),
    };
    let report = flip_core::bench::variance_diagnostic(&cfg.variance, &init)?;
    report.write_csv(ctx.create("variance.csv")?)?;
    for r in &report.rows {
        ctx.note(format!("n={} d={} variance={:e}", r.n, r.d, r.variance));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineConfig {
    distribution: DistributionConfig,
    heuristics: HeuristicsConfig,
}

fn cmd_baseline(ctx: &Ctx) -> CliResult<()> {
    let mut cfg: BaselineConfig = ctx.load()?;
    if let Some(s) = ctx.seed {
        cfg.distribution.rng_seed = s;
        cfg.heuristics.rng_seed = s;
    }
    let model = heuristics_train(&cfg.distribution, &cfg.heuristics)?;
    std::fs::create_dir_all(&ctx.out)?;
    model.save(&ctx.out.join("heuristics.json"))?;
    ctx.note(format!("selected candidate {} (average cost {:.6})", model.selected, model.candidate_costs[model.selected]));
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternsConfig {
    checkpoint: PathBuf,
    depths: Vec<usize>,
}

fn cmd_patterns(ctx: &Ctx) -> CliResult<()> {
    let cfg: PatternsConfig = ctx.load()?;
    let init = FlipInitializer::load(&ctx.require_file(&cfg.checkpoint)?)?;
    let report = extract_patterns(&init, &cfg.depths)?;
    report.write_csv(ctx.create("patterns.csv")?)?;
    if let Some(f) = report.ratio_monotone_fraction() {
        ctx.note(format!("non-decreasing ratio in {:.1}% of consecutive layers", 100.0 * f));
    }
    Ok(())
}

fn cmd_export(ctx: &Ctx) -> CliResult<()> {
    let input = ctx.config_path()?;
    let file = File::open(input).map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("traces");
    match input.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => {
            let traces = read_traces_jsonl(BufReader::new(file))?;
            traces_to_csv(&traces, ctx.create(&format!("{stem}.csv"))?)?;
        }
        Some("csv") => {
            let traces = traces_from_csv(BufReader::new(file))?;
            write_traces_jsonl(&traces, ctx.create(&format!("{stem}.jsonl"))?)?;
        }
        _ => return Err(CliError::Config(format!("{}: expected a .jsonl or .csv trace file", input.display()))),
    }
    Ok(())
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("FLIP_THREADS") {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("FLIP_THREADS={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx = Ctx {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Train => cmd_train(&ctx),
        Command::Test => cmd_test(&ctx),
        Command::Diagnose => cmd_diagnose(&ctx),
        Command::Baseline => cmd_baseline(&ctx),
        Command::Patterns => cmd_patterns(&ctx),
        Command::Export => cmd_export(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
