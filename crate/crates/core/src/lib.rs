//! One-shot synthesis of time series through their wavelet scalograms.
//!
//! A single observed series is transformed with a real Morlet continuous
//! wavelet transform, its signed coefficients are min-max normalized, and a
//! multi-scale patch-distribution matcher (sliced optimal transport over
//! overlapping patches) generates new scalograms of the same or a stretched
//! width. A ridge-regularized least-squares inverse maps them back to the
//! time domain.
//!
//! The crate also carries the pieces needed to evaluate the approach:
//! simulators for the Wiener process, Brownian bridge and drifted Brownian
//! motion, k-NN improved precision/recall, and an experiment harness.
//!
//! ```no_run
//! use scalogen::{processes, wavelet, patch_synth};
//!
//! let spec = processes::ProcessSpec::wiener();
//! let series = processes::simulate(&spec, 256, 7).unwrap();
//! let wcfg = wavelet::WaveletConfig::default();
//! let sc = wavelet::normalize(&wavelet::cwt(&series, &wcfg).unwrap()).unwrap();
//! let out = patch_synth::synthesize(&sc, &patch_synth::SynthConfig::default(), 1).unwrap();
//! let signed = wavelet::denormalize(&out).unwrap();
//! let synthetic = wavelet::icwt(&signed, 256, &wcfg).unwrap();
//! assert_eq!(synthetic.len(), 256);
//! ```

pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod patch_synth;
pub mod pipeline;
pub mod processes;
pub mod seed;
pub mod wavelet;

pub use error::{Error, Result};
pub use grid::Grid;
