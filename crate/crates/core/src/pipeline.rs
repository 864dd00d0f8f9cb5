//! End-to-end experiment harness.
//!
//! One experiment simulates a small training set and a large ground-truth
//! set from the same process, generates `total_synthetic / n_train`
//! synthetic series from every training series (transform, normalize,
//! synthesize, denormalize, invert), and scores the pooled synthetic set
//! against the ground truth with improved precision/recall.
//!
//! Seed tree, all via [`seed::derive_path`] from `base_seed`:
//!
//! | stream                     | path           |
//! |----------------------------|----------------|
//! | training set               | `[0]`          |
//! | ground truth               | `[1]`          |
//! | synthesis job `j` of `i`   | `[2, i, j]`    |
//!
//! Every random draw is fixed before any job runs, so the worker pool's
//! scheduling cannot change results.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, ReportRow};
use crate::metrics::{self, EvalReport, FeatureSet};
use crate::patch_synth::{self, SynthConfig};
use crate::processes::{self, Dataset, ProcessKind, ProcessSpec, TimeSeries};
use crate::seed;
use crate::wavelet::{self, CwtOperator, WaveletConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const TRAINING_STREAM: u64 = 0;
const GROUND_TRUTH_STREAM: u64 = 1;
const SYNTHESIS_STREAM: u64 = 2;

const PLOT_SYNTHETIC_LINES: usize = 20;
const PLOT_GROUND_TRUTH_SERIES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reshuffle,
    #[serde(rename = "retarget2x")]
    Retarget2x,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Reshuffle => "reshuffle",
            Mode::Retarget2x => "retarget2x",
        }
    }

    pub fn retarget_factor(self) -> f64 {
        match self {
            Mode::Reshuffle => 1.0,
            Mode::Retarget2x => 2.0,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reshuffle" | "reshuffling" => Ok(Mode::Reshuffle),
            "retarget2x" | "retarget" | "retargeting" => Ok(Mode::Retarget2x),
            other => Err(Error::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// How the longer ground-truth series of a retargeting run relate to the
/// training process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetargetHorizon {
    /// Keep the sample spacing, so the horizon grows with the length.
    ConstantSpacing,
    /// Keep the horizon and sample it more finely.
    ConstantHorizon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    pub n_train: usize,
    pub total_synthetic: usize,
    pub mode: Mode,
    pub ground_truth_count: usize,
    /// Training series length.
    pub length: usize,
    pub retarget_horizon: RetargetHorizon,
    pub wavelet: WaveletConfig,
    pub synth: SynthConfig,
    pub k: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            process: ProcessSpec::wiener(),
            n_train: 5,
            total_synthetic: 5000,
            mode: Mode::Reshuffle,
            ground_truth_count: 5000,
            length: 256,
            retarget_horizon: RetargetHorizon::ConstantSpacing,
            wavelet: WaveletConfig::default(),
            synth: SynthConfig::default(),
            k: metrics::DEFAULT_K,
            base_seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.wavelet.validate()?;
        self.effective_synth().validate()?;
        if self.n_train == 0 || self.total_synthetic == 0 || self.ground_truth_count == 0 {
            return Err(Error::Parameter(
                "n_train, total_synthetic and ground_truth_count must be positive".into(),
            ));
        }
        if self.length < 2 {
            return Err(Error::Parameter("length must be >= 2".into()));
        }
        if self.k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        Ok(())
    }

    /// Synthesis settings with the retarget factor forced by the mode.
    pub fn effective_synth(&self) -> SynthConfig {
        SynthConfig {
            retarget_factor: self.mode.retarget_factor(),
            ..self.synth.clone()
        }
    }

    pub fn output_length(&self) -> usize {
        self.effective_synth().output_width(self.length)
    }

    /// Process used for the ground truth at the output length.
    pub fn ground_truth_process(&self) -> ProcessSpec {
        let mut spec = self.process;
        if self.mode == Mode::Retarget2x && self.retarget_horizon == RetargetHorizon::ConstantSpacing {
            let dt = spec.horizon / (self.length - 1) as f64;
            spec.horizon = dt * (self.output_length() - 1) as f64;
        }
        spec
    }

    /// Synthetic series requested from each training series. The split is
    /// even when `n_train` divides `total_synthetic`; otherwise the first
    /// `total_synthetic % n_train` series get one extra.
    pub fn allocation(&self) -> Vec<usize> {
        if self.n_train == 0 {
            return Vec::new();
        }
        let base = self.total_synthetic / self.n_train;
        let extra = self.total_synthetic % self.n_train;
        (0..self.n_train).map(|i| base + usize::from(i < extra)).collect()
    }

    /// Multiplies ground-truth and synthetic budgets by `factor`, keeping
    /// at least one synthetic series per training series.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: usize| ((v as f64 * factor).round() as usize).max(1);
        Self {
            ground_truth_count: scale(self.ground_truth_count).max(self.k + 1),
            total_synthetic: scale(self.total_synthetic).max(self.n_train),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedEcho {
    pub base: u64,
    pub training: u64,
    pub ground_truth: u64,
    pub synthesis: u64,
}

impl SeedEcho {
    fn new(base: u64) -> Self {
        Self {
            base,
            training: seed::derive_path(base, &[TRAINING_STREAM]),
            ground_truth: seed::derive_path(base, &[GROUND_TRUTH_STREAM]),
            synthesis: seed::derive_path(base, &[SYNTHESIS_STREAM]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: String,
    pub config: ExperimentConfig,
    pub seeds: SeedEcho,
    pub ground_truth_process: ProcessSpec,
    pub allocation: Vec<usize>,
    pub files: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            status: "running".into(),
            config: cfg.clone(),
            seeds: SeedEcho::new(cfg.base_seed),
            ground_truth_process: cfg.ground_truth_process(),
            allocation: cfg.allocation(),
            files: Vec::new(),
            timings_ms: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Everything an experiment produces, before anything touches the disk.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub row: ReportRow,
    pub training: Dataset,
    pub ground_truth: Dataset,
    pub synthetic: Dataset,
    pub manifest: RunManifest,
}

fn timed<T>(manifest: &mut RunManifest, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.at_stage(stage));
    manifest
        .timings_ms
        .insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
    if out.is_err() {
        manifest.status = format!("failed: {stage}");
    }
    out
}

/// Generates `allocation[i]` synthetic series from training series `i`.
///
/// Job `j` of series `i` is seeded with `derive_seed(derive_seed(seed, i), j)`.
/// Output is ordered by training series, then job.
pub fn synthesize_dataset(
    training: &Dataset,
    allocation: &[usize],
    wavelet_cfg: &WaveletConfig,
    synth_cfg: &SynthConfig,
    seed: u64,
) -> Result<Dataset> {
    if allocation.len() != training.len() {
        return Err(Error::Shape(format!(
            "{} allocations for {} training series",
            allocation.len(),
            training.len()
        )));
    }
    let out_len = synth_cfg.output_width(training.series_len());
    let dt = training.dt();
    let targets = training
        .series
        .par_iter()
        .map(|s| wavelet::normalize(&wavelet::cwt(s, wavelet_cfg)?))
        .collect::<Result<Vec<_>>>()?;
    let op = CwtOperator::shared(wavelet_cfg, out_len)?;
    let jobs: Vec<(usize, u64)> = allocation
        .iter()
        .enumerate()
        .flat_map(|(i, &count)| (0..count as u64).map(move |j| (i, j)))
        .collect();
    let series = jobs
        .par_iter()
        .map(|&(i, j)| {
            let job_seed = seed::derive_path(seed, &[i as u64, j]);
            let generated = patch_synth::synthesize(&targets[i], synth_cfg, job_seed)?;
            let signed = wavelet::denormalize(&generated)?;
            TimeSeries::new(op.invert(signed.coeffs())?, dt)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series, format!("synthetic_{}", training.label.trim()), seed)
}

fn feature_set(ds: &Dataset, label: &str) -> Result<FeatureSet> {
    FeatureSet::new(&ds.rows(), label)
}

/// Runs an experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let mut manifest = RunManifest::new(cfg);
    let result = execute_inner(cfg, &mut manifest);
    match result {
        Ok((report, training, ground_truth, synthetic)) => {
            manifest.status = "ok".into();
            let row = ReportRow {
                process: cfg.process.kind.to_string(),
                n_train: cfg.n_train,
                mode: cfg.mode.to_string(),
                precision: report.precision,
                recall: report.recall,
                k: report.k,
                m_real: report.m_real,
                m_fake: report.m_fake,
                seed: cfg.base_seed,
            };
            Ok(ExperimentOutcome {
                report,
                row,
                training,
                ground_truth,
                synthetic,
                manifest,
            })
        }
        Err(e) => {
            // Best effort: leave the partial manifest behind for inspection.
            let _ = manifest.write(&cfg.out_dir);
            Err(e)
        }
    }
}

type Stages = (EvalReport, Dataset, Dataset, Dataset);

fn execute_inner(cfg: &ExperimentConfig, manifest: &mut RunManifest) -> Result<Stages> {
    timed(manifest, "validate", || cfg.validate())?;
    if !cfg.total_synthetic.is_multiple_of(cfg.n_train) {
        let msg = format!(
            "total_synthetic {} is not divisible by n_train {}; the first {} training series get one extra sample",
            cfg.total_synthetic,
            cfg.n_train,
            cfg.total_synthetic % cfg.n_train
        );
        eprintln!("warning: {msg}");
        manifest.warnings.push(msg);
    }
    let seeds = manifest.seeds.clone();
    let (training, ground_truth) = timed(manifest, "simulate", || {
        let training = processes::simulate_dataset(&cfg.process, cfg.n_train, cfg.length, seeds.training)?;
        let ground_truth = processes::simulate_dataset(
            &cfg.ground_truth_process(),
            cfg.ground_truth_count,
            cfg.output_length(),
            seeds.ground_truth,
        )?;
        Ok((training, ground_truth))
    })?;
    let synthetic = timed(manifest, "synthesize", || {
        synthesize_dataset(
            &training,
            &cfg.allocation(),
            &cfg.wavelet,
            &cfg.effective_synth(),
            seeds.synthesis,
        )
    })?;
    let mut report = timed(manifest, "evaluate", || {
        metrics::precision_recall(
            &feature_set(&ground_truth, "ground_truth")?,
            &feature_set(&synthetic, "synthetic")?,
            cfg.k,
        )
    })?;
    report.config = format!(
        "process={} n_train={} mode={} base_seed={} synth={}",
        cfg.process.label().replace(' ', ";"),
        cfg.n_train,
        cfg.mode,
        cfg.base_seed,
        cfg.effective_synth().canonical()
    );
    Ok((report, training, ground_truth, synthetic))
}

fn plot_rows(ds: &Dataset, limit: usize) -> String {
    let mut out = String::from("series,t,value\n");
    for (i, s) in ds.series.iter().take(limit).enumerate() {
        for (t, v) in s.times().zip(s.values()) {
            out.push_str(&format!("{i},{t},{v}\n"));
        }
    }
    out
}

/// Writes datasets, report, plot data and manifest of a finished run.
pub fn persist(outcome: &mut ExperimentOutcome, dir: &Path) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(dir.join("plotdata"))?;
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        fs::write(dir.join(name), text)?;
        files.push(name.to_string());
        Ok(())
    };
    put("training.csv", io::format_dataset(&outcome.training))?;
    put("ground_truth.csv", io::format_dataset(&outcome.ground_truth))?;
    put("synthetic.csv", io::format_dataset(&outcome.synthetic))?;
    put("report.csv", io::format_report(std::slice::from_ref(&outcome.row)))?;
    put(
        "plotdata/synthetic_lines.csv",
        plot_rows(&outcome.synthetic, PLOT_SYNTHETIC_LINES),
    )?;
    put(
        "plotdata/ground_truth_points.csv",
        plot_rows(&outcome.ground_truth, PLOT_GROUND_TRUTH_SERIES),
    )?;
    put("plotdata/training.csv", plot_rows(&outcome.training, usize::MAX))?;
    files.push("manifest.json".into());
    outcome.manifest.files = files;
    outcome
        .manifest
        .timings_ms
        .insert("persist".into(), start.elapsed().as_secs_f64() * 1e3);
    outcome.manifest.write(dir)
}

/// Runs one experiment and persists it under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(EvalReport, RunManifest)> {
    let mut outcome = execute(cfg)?;
    if let Err(e) = persist(&mut outcome, &cfg.out_dir) {
        outcome.manifest.status = "failed: persist".into();
        let _ = outcome.manifest.write(&cfg.out_dir);
        return Err(e.at_stage("persist"));
    }
    Ok((outcome.report, outcome.manifest))
}

/// Directory name of one table cell.
pub fn cell_dir(kind: ProcessKind, n_train: usize) -> String {
    format!("{kind}_n{n_train}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableManifest {
    pub version: String,
    pub mode: Mode,
    pub processes: Vec<ProcessSpec>,
    pub n_values: Vec<usize>,
    pub template: ExperimentConfig,
    pub cells: Vec<String>,
    pub files: Vec<String>,
}

/// Runs every `(process, n)` cell with the template's remaining settings,
/// each into its own sub-directory of `template.out_dir`, then writes the
/// combined `report.csv`, a wide `table.csv` and `plotdata/table.csv`.
pub fn run_table(
    processes: &[ProcessSpec],
    n_values: &[usize],
    mode: Mode,
    template: &ExperimentConfig,
) -> Result<Vec<ReportRow>> {
    let root = template.out_dir.clone();
    let mut rows = Vec::with_capacity(processes.len() * n_values.len());
    let mut cells = Vec::new();
    for spec in processes {
        for &n in n_values {
            let name = cell_dir(spec.kind, n);
            let cfg = ExperimentConfig {
                process: *spec,
                n_train: n,
                mode,
                out_dir: root.join(&name),
                ..template.clone()
            };
            run_experiment(&cfg)?;
            rows.push(io::parse_report(&fs::read_to_string(cfg.out_dir.join("report.csv"))?)?.remove(0));
            cells.push(name);
        }
    }
    fs::create_dir_all(root.join("plotdata"))?;
    fs::write(root.join("report.csv"), io::format_report(&rows))?;
    fs::write(root.join("table.csv"), format_table(processes, n_values, &rows))?;
    let mut plot = String::from("process,n_train,precision,recall\n");
    for r in &rows {
        plot.push_str(&format!("{},{},{},{}\n", r.process, r.n_train, r.precision, r.recall));
    }
    fs::write(root.join("plotdata/table.csv"), plot)?;
    let manifest = TableManifest {
        version: VERSION.to_string(),
        mode,
        processes: processes.to_vec(),
        n_values: n_values.to_vec(),
        template: template.clone(),
        cells,
        files: ["report.csv", "table.csv", "plotdata/table.csv", "manifest.json"]
            .map(String::from)
            .to_vec(),
    };
    fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(rows)
}

/// One line per training size, a precision and a recall column per process.
pub fn format_table(processes: &[ProcessSpec], n_values: &[usize], rows: &[ReportRow]) -> String {
    let mut out = String::from("n_train");
    for p in processes {
        out.push_str(&format!(",{k}_precision,{k}_recall", k = p.kind));
    }
    out.push('\n');
    for &n in n_values {
        out.push_str(&n.to_string());
        for p in processes {
            let cell = rows
                .iter()
                .find(|r| r.n_train == n && r.process == p.kind.as_str());
            match cell {
                Some(r) => out.push_str(&format!(",{:.2},{:.2}", r.precision, r.recall)),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_sums_to_budget() {
        let cfg = ExperimentConfig {
            n_train: 5,
            total_synthetic: 5000,
            ..Default::default()
        };
        assert_eq!(cfg.allocation(), vec![1000; 5]);
        let cfg = ExperimentConfig {
            n_train: 3,
            total_synthetic: 10,
            ..Default::default()
        };
        assert_eq!(cfg.allocation(), vec![4, 3, 3]);
        assert_eq!(cfg.allocation().iter().sum::<usize>(), 10);
    }

    #[test]
    fn retarget_mode_forces_length_and_horizon() {
        let cfg = ExperimentConfig {
            mode: Mode::Retarget2x,
            ..Default::default()
        };
        assert_eq!(cfg.effective_synth().retarget_factor, 2.0);
        assert_eq!(cfg.output_length(), 512);
        let gt = cfg.ground_truth_process();
        assert!((gt.horizon - 511.0 / 255.0).abs() < 1e-15);
        let same = ExperimentConfig {
            retarget_horizon: RetargetHorizon::ConstantHorizon,
            ..cfg.clone()
        };
        assert_eq!(same.ground_truth_process().horizon, 1.0);
        let reshuffle = ExperimentConfig {
            synth: SynthConfig {
                retarget_factor: 2.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(reshuffle.output_length(), 256);
    }

    #[test]
    fn scaling_keeps_ratio() {
        let cfg = ExperimentConfig::default().scaled(0.1);
        assert_eq!((cfg.ground_truth_count, cfg.total_synthetic), (500, 500));
    }

    #[test]
    fn mode_parsing_and_serde() {
        assert_eq!("retarget2x".parse::<Mode>().unwrap(), Mode::Retarget2x);
        assert_eq!(serde_json::to_string(&Mode::Retarget2x).unwrap(), "\"retarget2x\"");
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"n_train": 50, "mode": "retarget2x"}"#).unwrap();
        assert_eq!(cfg.n_train, 50);
        assert_eq!(cfg.total_synthetic, 5000);
    }

    #[test]
    fn invalid_config_reports_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            n_train: 0,
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        match execute(&cfg) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "validate"),
            other => panic!("unexpected {other:?}"),
        }
        let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(m.status, "failed: validate");
    }
}
