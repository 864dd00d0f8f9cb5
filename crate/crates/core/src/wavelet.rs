//! Real Morlet continuous wavelet transform on a dyadic scale ladder.
//!
//! The forward transform is a direct zero-padded correlation of the series
//! with `ψ_s(t) = s^{-1/2} · exp(−(t/s)²/2) · cos(ω₀ t / s)`. Coefficients
//! stay signed; [`normalize`] maps a whole grid affinely onto `[0, 1]`.
//!
//! The inverse is the ridge-regularized least-squares solution
//! `argmin ‖A x − y‖² + λ‖x‖²`, where `A` is the forward transform written
//! as an `(S·L) × L` matrix. The Cholesky factor of `AᵀA + λI` is computed
//! once per `(config, L)` and cached for the life of the process.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::processes::TimeSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveletConfig {
    /// Morlet center frequency ω₀.
    pub omega0: f64,
    pub scales: Vec<f64>,
    /// Kernel half-support in units of scale.
    pub kernel_truncation: f64,
    /// Ridge weight λ of the inverse.
    pub ridge: f64,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            omega0: 5.0,
            scales: dyadic_scales(1, 8),
            kernel_truncation: 8.0,
            ridge: 1e-6,
        }
    }
}

/// `[2^lo, …, 2^hi]`.
pub fn dyadic_scales(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(Error::Parameter(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if !(self.kernel_truncation.is_finite() && self.kernel_truncation > 0.0) {
            return Err(Error::Parameter("kernel_truncation must be > 0".into()));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Parameter("ridge must be >= 0".into()));
        }
        validate_scales(&self.scales)
    }
}

fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::Parameter("scale list is empty".into()));
    }
    if scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::Parameter("scales must be positive and finite".into()));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("scales must be strictly increasing".into()));
    }
    Ok(())
}

/// Original coefficient range of a normalized grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub lo: f64,
    pub hi: f64,
}

/// Coefficient grid, one row per scale and one column per time sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Scalogram {
    coeffs: Grid,
    scales: Vec<f64>,
    norm: Option<NormParams>,
}

impl Scalogram {
    pub fn new(coeffs: Grid, scales: Vec<f64>, norm: Option<NormParams>) -> Result<Self> {
        validate_scales(&scales)?;
        if coeffs.rows() != scales.len() {
            return Err(Error::Shape(format!(
                "{} coefficient rows for {} scales",
                coeffs.rows(),
                scales.len()
            )));
        }
        if !coeffs.is_finite() {
            return Err(Error::Data("scalogram contains non-finite coefficients".into()));
        }
        if let Some(n) = norm {
            if !(n.hi > n.lo) {
                return Err(Error::Parameter(format!("norm range [{}, {}] is empty", n.lo, n.hi)));
            }
            if coeffs.min() < 0.0 || coeffs.max() > 1.0 {
                return Err(Error::Data("normalized coefficients must lie in [0, 1]".into()));
            }
        }
        Ok(Self { coeffs, scales, norm })
    }

    pub fn coeffs(&self) -> &Grid {
        &self.coeffs
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn norm(&self) -> Option<NormParams> {
        self.norm
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn width(&self) -> usize {
        self.coeffs.cols()
    }
}

fn half_width(scale: f64, cfg: &WaveletConfig) -> usize {
    (cfg.kernel_truncation * scale).ceil() as usize
}

/// Samples of the scaled real Morlet on `t ∈ [−h, h]`, `h = ⌈truncation·s⌉`.
/// The centre sample sits at index `h`.
pub fn morlet_kernel(scale: f64, cfg: &WaveletConfig) -> Vec<f64> {
    let h = half_width(scale, cfg) as i64;
    let amp = 1.0 / scale.sqrt();
    let mut k = vec![0.0; (2 * h + 1) as usize];
    for t in 0..=h {
        let u = t as f64 / scale;
        let v = amp * (-0.5 * u * u).exp() * (cfg.omega0 * u).cos();
        k[(h + t) as usize] = v;
        k[(h - t) as usize] = v;
    }
    k
}

/// `coeffs[i][j] = Σ_k x[k] ψ_{s_i}(k − j)` with zeros outside the series.
pub fn cwt_values(x: &[f64], cfg: &WaveletConfig) -> Result<Grid> {
    cfg.validate()?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite sample at index {i}")));
    }
    let len = x.len();
    if len == 0 {
        return Err(Error::Size("empty series".into()));
    }
    let mut out = Grid::zeros(cfg.scales.len(), len);
    for (i, &s) in cfg.scales.iter().enumerate() {
        let kernel = morlet_kernel(s, cfg);
        let h = half_width(s, cfg);
        let row = out.row_mut(i);
        for (j, dst) in row.iter_mut().enumerate() {
            // k − j ∈ [−h, h] and k ∈ [0, len).
            let k_lo = j.saturating_sub(h);
            let k_hi = (j + h).min(len - 1);
            let off = h + k_lo - j;
            *dst = x[k_lo..=k_hi]
                .iter()
                .zip(&kernel[off..])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    Ok(out)
}

pub fn cwt(series: &TimeSeries, cfg: &WaveletConfig) -> Result<Scalogram> {
    let coeffs = cwt_values(series.values(), cfg)?;
    Scalogram::new(coeffs, cfg.scales.clone(), None)
}

/// Global min-max map of the signed coefficients onto `[0, 1]`.
pub fn normalize(sc: &Scalogram) -> Result<Scalogram> {
    if sc.norm.is_some() {
        return Err(Error::State("scalogram is already normalized".into()));
    }
    let lo = sc.coeffs.min();
    let hi = sc.coeffs.max();
    if !(hi > lo) {
        return Err(Error::DegenerateRange(lo));
    }
    let span = hi - lo;
    let coeffs = sc.coeffs.map(|c| ((c - lo) / span).clamp(0.0, 1.0));
    Ok(Scalogram {
        coeffs,
        scales: sc.scales.clone(),
        norm: Some(NormParams { lo, hi }),
    })
}

pub fn denormalize(sc: &Scalogram) -> Result<Scalogram> {
    let NormParams { lo, hi } = sc
        .norm
        .ok_or_else(|| Error::State("scalogram carries no normalization parameters".into()))?;
    let span = hi - lo;
    Ok(Scalogram {
        coeffs: sc.coeffs.map(|c| lo + c * span),
        scales: sc.scales.clone(),
        norm: None,
    })
}

/// Materialized forward operator for one `(config, length)` pair together
/// with the Cholesky factor of its ridge-regularized normal matrix.
pub struct CwtOperator {
    cfg: WaveletConfig,
    len: usize,
    matrix: DMatrix<f64>,
    normal: Cholesky<f64, Dyn>,
}

impl std::fmt::Debug for CwtOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CwtOperator")
            .field("len", &self.len)
            .field("scales", &self.cfg.scales)
            .finish()
    }
}

impl CwtOperator {
    pub fn new(cfg: &WaveletConfig, len: usize) -> Result<Self> {
        cfg.validate()?;
        if len < 2 {
            return Err(Error::Size(format!("length must be >= 2, got {len}")));
        }
        let s = cfg.scales.len();
        let mut matrix = DMatrix::<f64>::zeros(s * len, len);
        for (i, &scale) in cfg.scales.iter().enumerate() {
            let kernel = morlet_kernel(scale, cfg);
            let h = half_width(scale, cfg);
            for j in 0..len {
                let k_lo = j.saturating_sub(h);
                let k_hi = (j + h).min(len - 1);
                for k in k_lo..=k_hi {
                    matrix[(i * len + j, k)] = kernel[h + k - j];
                }
            }
        }
        let mut gram = matrix.tr_mul(&matrix);
        for d in 0..len {
            gram[(d, d)] += cfg.ridge;
        }
        let normal = Cholesky::new(gram)
            .ok_or_else(|| Error::Numeric("normal matrix is not positive definite; raise ridge".into()))?;
        Ok(Self {
            cfg: cfg.clone(),
            len,
            matrix,
            normal,
        })
    }

    /// Process-wide cached operator for `(cfg, len)`.
    pub fn shared(cfg: &WaveletConfig, len: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<OperatorKey, Arc<CwtOperator>>>> = OnceLock::new();
        let key = OperatorKey::new(cfg, len);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(op) = cache.lock().expect("operator cache poisoned").get(&key) {
            return Ok(Arc::clone(op));
        }
        // Built outside the lock; a racing builder produces the same matrix.
        let op = Arc::new(Self::new(cfg, len)?);
        let mut guard = cache.lock().expect("operator cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(op)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn config(&self) -> &WaveletConfig {
        &self.cfg
    }

    /// The `(S·L) × L` matrix; row `i·L + j` holds scale `i`, time `j`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Least-squares inverse of a signed coefficient grid.
    pub fn invert(&self, coeffs: &Grid) -> Result<Vec<f64>> {
        if coeffs.rows() != self.cfg.scales.len() || coeffs.cols() != self.len {
            return Err(Error::Shape(format!(
                "expected {}x{} coefficients, got {}x{}",
                self.cfg.scales.len(),
                self.len,
                coeffs.rows(),
                coeffs.cols()
            )));
        }
        let y = DVector::from_column_slice(coeffs.as_slice());
        let rhs = self.matrix.tr_mul(&y);
        let x = self.normal.solve(&rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("inverse produced non-finite samples".into()));
        }
        Ok(x.as_slice().to_vec())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct OperatorKey {
    len: usize,
    bits: Vec<u64>,
}

impl OperatorKey {
    fn new(cfg: &WaveletConfig, len: usize) -> Self {
        let mut bits = vec![cfg.omega0.to_bits(), cfg.kernel_truncation.to_bits(), cfg.ridge.to_bits()];
        bits.extend(cfg.scales.iter().map(|s| s.to_bits()));
        Self { len, bits }
    }
}

/// Inverse transform of a signed scalogram to a series of `target_length`
/// samples with unit spacing.
pub fn icwt(sc: &Scalogram, target_length: usize, cfg: &WaveletConfig) -> Result<TimeSeries> {
    if sc.norm.is_some() {
        return Err(Error::State("denormalize the scalogram before inverting it".into()));
    }
    if sc.width() != target_length {
        return Err(Error::Shape(format!(
            "scalogram width {} does not match target length {target_length}",
            sc.width()
        )));
    }
    if sc.scales != cfg.scales {
        return Err(Error::Shape("scalogram scales differ from the wavelet config".into()));
    }
    let op = CwtOperator::shared(cfg, target_length)?;
    TimeSeries::new(op.invert(&sc.coeffs)?, 1.0)
}
