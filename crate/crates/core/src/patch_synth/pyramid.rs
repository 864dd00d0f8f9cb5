use super::SynthConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Time-axis pyramid, coarsest level first. Every level keeps the full
/// scale-axis height.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    pub levels: Vec<Grid>,
    pub widths: Vec<usize>,
}

impl Pyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> &Grid {
        self.levels.last().expect("pyramid has at least one level")
    }
}

/// Level widths `round(W·ratio^k)` that stay at or above `min_width`,
/// coarsest first, with rounding duplicates dropped.
pub fn pyramid_widths(width: usize, ratio: f64, min_width: usize) -> Result<Vec<usize>> {
    if width < min_width {
        return Err(Error::Size(format!("grid width {width} is below min_width {min_width}")));
    }
    let mut widths = vec![width];
    for k in 1.. {
        let w = (width as f64 * ratio.powi(k)).round() as usize;
        if w < min_width {
            break;
        }
        if w < *widths.last().unwrap() {
            widths.push(w);
        }
    }
    widths.reverse();
    Ok(widths)
}

pub fn build_pyramid(target: &Grid, cfg: &SynthConfig) -> Result<Pyramid> {
    cfg.validate()?;
    let widths = pyramid_widths(target.cols(), cfg.pyramid_ratio, cfg.min_width)?;
    let levels = widths.iter().map(|&w| target.resize_cols(w)).collect();
    Ok(Pyramid { levels, widths })
}
