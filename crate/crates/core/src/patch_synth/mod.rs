//! Multi-scale patch-distribution matching on scalogram grids.
//!
//! A target grid is turned into a pyramid along the time axis. Synthesis
//! starts from a noisy copy of the coarsest level and, level by level,
//! moves the distribution of its overlapping patches toward the target's
//! patch distribution with sliced optimal-transport steps, folds the
//! patches back into a grid, and upsamples to the next level. The output
//! width is the input width times `retarget_factor`: `1.0` reshuffles the
//! scalogram, larger factors retarget it to a longer duration.

mod patches;
mod pyramid;
mod sliced;
mod synth;

pub use patches::{extract_patches, fold_patches, PatchSet};
pub use pyramid::{build_pyramid, pyramid_widths, Pyramid};
pub use sliced::{ot_patch_update, random_directions, swd};
pub use synth::{noisy_canvas, synthesize, synthesize_traced, LevelTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub patch_size: usize,
    pub stride: usize,
    /// Time-axis downscale between adjacent pyramid levels.
    pub pyramid_ratio: f64,
    /// Smallest allowed time width of the coarsest level.
    pub min_width: usize,
    pub num_projections: usize,
    pub steps_per_level: usize,
    /// Standard deviation of the noise added to the coarsest canvas.
    pub noise_sigma: f64,
    /// Output width over input width.
    pub retarget_factor: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            patch_size: 7,
            stride: 1,
            pyramid_ratio: 0.75,
            min_width: 24,
            num_projections: 8,
            steps_per_level: 60,
            noise_sigma: 0.25,
            retarget_factor: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 2 {
            return Err(Error::Parameter(format!("patch_size must be >= 2, got {}", self.patch_size)));
        }
        if self.patch_size > self.min_width {
            return Err(Error::Parameter(format!(
                "patch_size {} exceeds min_width {}",
                self.patch_size, self.min_width
            )));
        }
        if self.stride == 0 {
            return Err(Error::Parameter("stride must be positive".into()));
        }
        if !(self.pyramid_ratio > 0.0 && self.pyramid_ratio < 1.0) {
            return Err(Error::Parameter(format!(
                "pyramid_ratio must lie in (0, 1), got {}",
                self.pyramid_ratio
            )));
        }
        if self.num_projections == 0 {
            return Err(Error::Parameter("num_projections must be positive".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Parameter("noise_sigma must be >= 0".into()));
        }
        if !(self.retarget_factor.is_finite() && self.retarget_factor > 0.0) {
            return Err(Error::Parameter("retarget_factor must be > 0".into()));
        }
        Ok(())
    }

    /// Output width for an input of `width` columns.
    pub fn output_width(&self, width: usize) -> usize {
        (width as f64 * self.retarget_factor).round() as usize
    }

    /// Canonical `key=value` list, comma separated, in field order.
    pub fn canonical(&self) -> String {
        format!(
            "patch_size={},stride={},pyramid_ratio={},min_width={},num_projections={},steps_per_level={},noise_sigma={},retarget_factor={}",
            self.patch_size,
            self.stride,
            self.pyramid_ratio,
            self.min_width,
            self.num_projections,
            self.steps_per_level,
            self.noise_sigma,
            self.retarget_factor
        )
    }
}
