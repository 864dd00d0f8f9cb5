//! Ground-truth random processes: Wiener process, Brownian bridge and
//! drifted Brownian motion, sampled on the uniform grid `t_i = i·T/(L−1)`.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Uniformly sampled real-valued series.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    t0: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        Self::with_start(values, dt, 0.0)
    }

    pub fn with_start(values: Vec<f64>, dt: f64, t0: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Size(format!(
                "a time series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) || !t0.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive and finite, got {dt}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self { values, dt, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.t0 + i as f64 * self.dt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    WienerProcess,
    BrownianBridge,
    DriftedBrownianMotion,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 3] = [
        ProcessKind::BrownianBridge,
        ProcessKind::DriftedBrownianMotion,
        ProcessKind::WienerProcess,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::WienerProcess => "wiener_process",
            ProcessKind::BrownianBridge => "brownian_bridge",
            ProcessKind::DriftedBrownianMotion => "drifted_brownian_motion",
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "wiener_process" | "wiener" => Ok(ProcessKind::WienerProcess),
            "brownian_bridge" | "bridge" => Ok(ProcessKind::BrownianBridge),
            "drifted_brownian_motion" | "drifted" | "drift" => Ok(ProcessKind::DriftedBrownianMotion),
            other => Err(Error::Parse(format!("unknown process kind `{other}`"))),
        }
    }
}

/// Process parameters. `drift` only affects drifted Brownian motion and
/// `terminal` only the bridge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    #[serde(default = "default_drift")]
    pub drift: f64,
    #[serde(default = "default_one")]
    pub volatility: f64,
    #[serde(default)]
    pub terminal: f64,
    #[serde(default = "default_one")]
    pub horizon: f64,
}

fn default_drift() -> f64 {
    2.0
}

fn default_one() -> f64 {
    1.0
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Self {
        Self {
            kind,
            drift: default_drift(),
            volatility: 1.0,
            terminal: 0.0,
            horizon: 1.0,
        }
    }

    pub fn wiener() -> Self {
        Self::new(ProcessKind::WienerProcess)
    }

    pub fn brownian_bridge() -> Self {
        Self::new(ProcessKind::BrownianBridge)
    }

    pub fn drifted() -> Self {
        Self::new(ProcessKind::DriftedBrownianMotion)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volatility.is_finite() && self.volatility > 0.0) {
            return Err(Error::Parameter(format!("volatility must be > 0, got {}", self.volatility)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !self.drift.is_finite() || !self.terminal.is_finite() {
            return Err(Error::Parameter("drift and terminal must be finite".into()));
        }
        Ok(())
    }

    /// Kind plus every parameter, as `key=value` pairs.
    pub fn label(&self) -> String {
        format!(
            "{} drift={} volatility={} terminal={} horizon={}",
            self.kind, self.drift, self.volatility, self.terminal, self.horizon
        )
    }
}

/// Equal-length series drawn from one process.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub series: Vec<TimeSeries>,
    pub label: String,
    pub seed: u64,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>, label: impl Into<String>, seed: u64) -> Result<Self> {
        if let Some(first) = series.first() {
            let (len, dt) = (first.len(), first.dt());
            if series.iter().any(|s| s.len() != len || s.dt() != dt) {
                return Err(Error::Shape("dataset series must share length and dt".into()));
            }
        }
        Ok(Self {
            series,
            label: label.into(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.series.first().map_or(0, TimeSeries::len)
    }

    pub fn dt(&self) -> f64 {
        self.series.first().map_or(1.0, TimeSeries::dt)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.series.iter().map(|s| s.values().to_vec()).collect()
    }
}

/// Unit-volatility Wiener path on `length` grid points over `[0, horizon]`.
fn unit_wiener(length: usize, horizon: f64, seed: u64) -> Vec<f64> {
    let dt = horizon / (length - 1) as f64;
    let sd = dt.sqrt();
    let mut rng = seed::rng(seed);
    let mut w = Vec::with_capacity(length);
    let mut acc = 0.0;
    w.push(0.0);
    for _ in 1..length {
        let z: f64 = StandardNormal.sample(&mut rng);
        acc += sd * z;
        w.push(acc);
    }
    w
}

/// Samples one path. Identical arguments give bit-identical output.
pub fn simulate(spec: &ProcessSpec, length: usize, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    if length < 2 {
        return Err(Error::Size(format!("length must be >= 2, got {length}")));
    }
    let last = (length - 1) as f64;
    let dt = spec.horizon / last;
    let w = unit_wiener(length, spec.horizon, seed);
    let sigma = spec.volatility;
    let values = match spec.kind {
        ProcessKind::WienerProcess => w.iter().map(|&x| sigma * x).collect(),
        ProcessKind::DriftedBrownianMotion => w
            .iter()
            .enumerate()
            .map(|(i, &x)| sigma * x + spec.drift * (spec.horizon * i as f64 / last))
            .collect(),
        ProcessKind::BrownianBridge => {
            let w_end = sigma * w[length - 1];
            let mut b: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(i, &x)| sigma * x - (i as f64 / last) * (w_end - spec.terminal))
                .collect();
            // Pin both ends exactly; the formula alone leaves rounding at t = T.
            b[0] = 0.0;
            b[length - 1] = spec.terminal;
            b
        }
    };
    TimeSeries::new(values, dt)
}

/// `count` independent paths; path `i` uses seed `derive_seed(seed, i)`.
pub fn simulate_dataset(spec: &ProcessSpec, count: usize, length: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::Size("dataset count must be >= 1".into()));
    }
    let series = (0..count as u64)
        .into_par_iter()
        .map(|i| simulate(spec, length, seed::derive_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series, spec.label(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_pins_both_ends() {
        for seed in 0..50 {
            let s = simulate(&ProcessSpec::brownian_bridge(), 256, seed).unwrap();
            assert_eq!(s.values()[0], 0.0);
            assert_eq!(s.values()[255], 0.0);
        }
        let mut spec = ProcessSpec::brownian_bridge();
        spec.terminal = 0.37;
        let s = simulate(&spec, 100, 3).unwrap();
        assert_eq!(s.values()[99], 0.37);
    }

    #[test]
    fn wiener_starts_at_zero() {
        let s = simulate(&ProcessSpec::wiener(), 256, 11).unwrap();
        assert_eq!(s.values()[0], 0.0);
        assert_eq!(s.len(), 256);
        assert_eq!(s.dt(), 1.0 / 255.0);
    }

    #[test]
    fn rejects_invalid_input() {
        let mut spec = ProcessSpec::wiener();
        assert!(matches!(simulate(&spec, 1, 0), Err(Error::Size(_))));
        spec.volatility = 0.0;
        assert!(matches!(simulate(&spec, 10, 0), Err(Error::Parameter(_))));
        spec.volatility = 1.0;
        spec.horizon = -1.0;
        assert!(matches!(simulate(&spec, 10, 0), Err(Error::Parameter(_))));
        assert!(matches!(
            simulate_dataset(&ProcessSpec::wiener(), 0, 10, 0),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn time_series_rejects_non_finite() {
        assert!(matches!(TimeSeries::new(vec![0.0, f64::NAN], 1.0), Err(Error::Data(_))));
        assert!(TimeSeries::new(vec![0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn singleton_dataset_matches_simulate() {
        let spec = ProcessSpec::drifted();
        let ds = simulate_dataset(&spec, 1, 64, 99).unwrap();
        let one = simulate(&spec, 64, seed::derive_seed(99, 0)).unwrap();
        assert_eq!(ds.series, vec![one]);
    }

    #[test]
    fn dataset_is_deterministic() {
        let a = simulate_dataset(&ProcessSpec::wiener(), 2, 256, 5).unwrap();
        let b = simulate_dataset(&ProcessSpec::wiener(), 2, 256, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.series[0], a.series[1]);
    }

    #[test]
    fn kind_parsing() {
        for k in ProcessKind::ALL {
            assert_eq!(k.as_str().parse::<ProcessKind>().unwrap(), k);
        }
        assert!("levy".parse::<ProcessKind>().is_err());
    }
}
