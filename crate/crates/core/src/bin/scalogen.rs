use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scalogen::io;
use scalogen::metrics::{self, FeatureSet};
use scalogen::patch_synth::{self, SynthConfig};
use scalogen::pipeline::{self, ExperimentConfig, Mode, RetargetHorizon, RunManifest};
use scalogen::processes::{self, Dataset, ProcessKind, ProcessSpec};
use scalogen::wavelet::{self, WaveletConfig};
use scalogen::{Error, Result};

#[derive(Parser)]
#[command(name = "scalogen", version, about = "Wavelet-scalogram patch synthesis for time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset of process paths.
    Simulate(SimulateArgs),
    /// Forward or inverse wavelet transform of a file.
    Transform(TransformArgs),
    /// Synthesize one new scalogram from a normalized scalogram file.
    Generate(GenerateArgs),
    /// Precision and recall of a synthetic dataset against a real one.
    Evaluate(EvaluateArgs),
    /// Full run: simulate, synthesize, evaluate, persist.
    Experiment(ExperimentArgs),
    /// The process × training-size grid for one mode.
    Table(TableArgs),
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long, default_value = "wiener_process")]
    process: ProcessKind,
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    volatility: Option<f64>,
    #[arg(long)]
    terminal: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

impl ProcessArgs {
    fn apply(&self, spec: &mut ProcessSpec) {
        if let Some(v) = self.drift {
            spec.drift = v;
        }
        if let Some(v) = self.volatility {
            spec.volatility = v;
        }
        if let Some(v) = self.terminal {
            spec.terminal = v;
        }
        if let Some(v) = self.horizon {
            spec.horizon = v;
        }
    }

    fn spec(&self) -> ProcessSpec {
        let mut spec = ProcessSpec::new(self.process);
        self.apply(&mut spec);
        spec
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    process: ProcessArgs,
    #[arg(long, short = 'n', default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Cwt,
    Icwt,
}

#[derive(Args)]
struct WaveletArgs {
    #[arg(long)]
    omega0: Option<f64>,
    /// Comma-separated scale list.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    #[arg(long)]
    kernel_truncation: Option<f64>,
    #[arg(long)]
    ridge: Option<f64>,
}

impl WaveletArgs {
    fn apply(&self, cfg: &mut WaveletConfig) {
        if let Some(v) = self.omega0 {
            cfg.omega0 = v;
        }
        if let Some(v) = &self.scales {
            cfg.scales = v.clone();
        }
        if let Some(v) = self.kernel_truncation {
            cfg.kernel_truncation = v;
        }
        if let Some(v) = self.ridge {
            cfg.ridge = v;
        }
    }

    fn config(&self) -> WaveletConfig {
        let mut cfg = WaveletConfig::default();
        self.apply(&mut cfg);
        cfg
    }
}

#[derive(Args)]
struct TransformArgs {
    direction: Direction,
    /// Dataset file for `cwt`, scalogram file for `icwt`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Row of the dataset to transform (`cwt`).
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Min-max normalize the scalogram (`cwt`).
    #[arg(long)]
    normalize: bool,
    /// Output length (`icwt`); defaults to the scalogram width.
    #[arg(long)]
    length: Option<usize>,
    #[command(flatten)]
    wavelet: WaveletArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    pyramid_ratio: Option<f64>,
    #[arg(long)]
    min_width: Option<usize>,
    #[arg(long)]
    num_projections: Option<usize>,
    #[arg(long)]
    steps_per_level: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

impl SynthArgs {
    fn apply(&self, cfg: &mut SynthConfig) {
        if let Some(v) = self.patch_size {
            cfg.patch_size = v;
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if let Some(v) = self.pyramid_ratio {
            cfg.pyramid_ratio = v;
        }
        if let Some(v) = self.min_width {
            cfg.min_width = v;
        }
        if let Some(v) = self.num_projections {
            cfg.num_projections = v;
        }
        if let Some(v) = self.steps_per_level {
            cfg.steps_per_level = v;
        }
        if let Some(v) = self.noise_sigma {
            cfg.noise_sigma = v;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Normalized scalogram file.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    retarget_factor: f64,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    fake: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_K)]
    k: usize,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config, or a `manifest.json` from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    total_synthetic: Option<usize>,
    #[arg(long)]
    ground_truth_count: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    retarget_horizon: Option<HorizonArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Multiply the ground-truth and synthetic budgets, e.g. 0.1.
    #[arg(long)]
    scale: Option<f64>,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    synth: SynthArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    ConstantSpacing,
    ConstantHorizon,
}

impl RunArgs {
    fn base(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => load_config(path),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.total_synthetic {
            cfg.total_synthetic = v;
        }
        if let Some(v) = self.ground_truth_count {
            cfg.ground_truth_count = v;
        }
        if let Some(v) = self.length {
            cfg.length = v;
        }
        if let Some(v) = self.retarget_horizon {
            cfg.retarget_horizon = match v {
                HorizonArg::ConstantSpacing => RetargetHorizon::ConstantSpacing,
                HorizonArg::ConstantHorizon => RetargetHorizon::ConstantHorizon,
            };
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.base_seed {
            cfg.base_seed = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        self.wavelet.apply(&mut cfg.wavelet);
        self.synth.apply(&mut cfg.synth);
        if let Some(f) = self.scale {
            *cfg = cfg.scaled(f);
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    process: Option<ProcessKind>,
    #[arg(long)]
    drift: Option<f64>,
    #[arg(long)]
    volatility: Option<f64>,
    #[arg(long)]
    terminal: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value = "reshuffle")]
    mode: Mode,
    #[arg(long, value_delimiter = ',', default_value = "brownian_bridge,drifted_brownian_motion,wiener_process")]
    processes: Vec<ProcessKind>,
    #[arg(long, value_delimiter = ',', default_value = "5,50,500")]
    n_values: Vec<usize>,
    #[command(flatten)]
    run: RunArgs,
}

/// Accepts either a bare config document or a run manifest.
fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("config").is_some() && value.get("seeds").is_some() {
        let manifest: RunManifest = serde_json::from_value(value)?;
        return Ok(manifest.config);
    }
    Ok(serde_json::from_value(value)?)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let ds = processes::simulate_dataset(&args.process.spec(), args.count, args.length, args.seed)?;
    io::write_dataset(&args.out, &ds)?;
    println!("wrote {} series of length {} to {}", ds.len(), ds.series_len(), args.out.display());
    Ok(())
}

fn transform(args: &TransformArgs) -> Result<()> {
    let mut cfg = args.wavelet.config();
    match args.direction {
        Direction::Cwt => {
            let ds = io::read_dataset(&args.input)?;
            let series = ds
                .series
                .get(args.index)
                .ok_or_else(|| Error::Parameter(format!("index {} out of range for {} series", args.index, ds.len())))?;
            let mut sc = wavelet::cwt(series, &cfg)?;
            if args.normalize {
                sc = wavelet::normalize(&sc)?;
            }
            io::write_scalogram(&args.out, &sc, &[("omega0", cfg.omega0.to_string()), ("dt", series.dt().to_string())])?;
        }
        Direction::Icwt => {
            let (sc, header) = io::read_scalogram(&args.input)?;
            // Unless overridden, invert with the settings the file was made with.
            if args.wavelet.scales.is_none() {
                cfg.scales = sc.scales().to_vec();
            }
            if args.wavelet.omega0.is_none() {
                if let Some(w) = header.get("omega0").and_then(|v| v.parse().ok()) {
                    cfg.omega0 = w;
                }
            }
            let sc = if sc.norm().is_some() { wavelet::denormalize(&sc)? } else { sc };
            let len = args.length.unwrap_or(sc.width());
            let x = wavelet::icwt(&sc, len, &cfg)?;
            let dt = header.get("dt").and_then(|v| v.parse().ok()).unwrap_or(1.0);
            let x = processes::TimeSeries::new(x.into_values(), dt)?;
            io::write_dataset(&args.out, &Dataset::new(vec![x], "reconstructed", 0)?)?;
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let (target, header) = io::read_scalogram(&args.input)?;
    let mut cfg = SynthConfig {
        retarget_factor: args.retarget_factor,
        ..SynthConfig::default()
    };
    args.synth.apply(&mut cfg);
    let out = patch_synth::synthesize(&target, &cfg, args.seed)?;
    let mut extra = vec![("seed", args.seed.to_string()), ("synth", cfg.canonical())];
    for key in ["omega0", "dt"] {
        if let Some(v) = header.get(key) {
            extra.push((key, v.to_string()));
        }
    }
    io::write_scalogram(&args.out, &out, &extra)?;
    println!("wrote {}×{} scalogram to {}", out.num_scales(), out.width(), args.out.display());
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let real = io::read_dataset(&args.real)?;
    let fake = io::read_dataset(&args.fake)?;
    let report = metrics::precision_recall(
        &FeatureSet::new(&real.rows(), real.label.clone())?,
        &FeatureSet::new(&fake.rows(), fake.label.clone())?,
        args.k,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let mut cfg = args.run.base()?;
    if let Some(kind) = args.process {
        if kind != cfg.process.kind {
            cfg.process = ProcessSpec::new(kind);
        }
    }
    let overrides = ProcessArgs {
        process: cfg.process.kind,
        drift: args.drift,
        volatility: args.volatility,
        terminal: args.terminal,
        horizon: args.horizon,
    };
    overrides.apply(&mut cfg.process);
    if let Some(n) = args.n_train {
        cfg.n_train = n;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    args.run.apply(&mut cfg);
    let (report, _) = pipeline::run_experiment(&cfg)?;
    println!(
        "{} n={} {}: precision={:.4} recall={:.4} -> {}",
        cfg.process.kind,
        cfg.n_train,
        cfg.mode,
        report.precision,
        report.recall,
        cfg.out_dir.display()
    );
    Ok(())
}

fn table(args: &TableArgs) -> Result<()> {
    let mut template = args.run.base()?;
    args.run.apply(&mut template);
    let processes: Vec<ProcessSpec> = args
        .processes
        .iter()
        .map(|&k| {
            if k == template.process.kind {
                template.process
            } else {
                ProcessSpec::new(k)
            }
        })
        .collect();
    let rows = pipeline::run_table(&processes, &args.n_values, args.mode, &template)?;
    print!("{}", pipeline::format_table(&processes, &args.n_values, &rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Transform(a) => transform(a),
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Table(a) => table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
