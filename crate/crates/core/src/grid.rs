//! Dense row-major real matrix used for scalograms and pyramid levels.
//!
//! Rows are wavelet scales, columns are time. Resampling only ever touches
//! the time axis.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Size(format!("grid must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "grid must be non-empty");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a grid from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("rows have differing lengths".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise `self - other`; both grids must share a shape.
    pub fn sub(&self, other: &Grid) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Grid) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn clamp(&mut self, lo: f64, hi: f64) {
        for v in &mut self.data {
            *v = v.clamp(lo, hi);
        }
    }

    /// Resamples the time axis to `width` columns.
    ///
    /// Upsampling is linear interpolation on pixel centers. Downsampling
    /// averages the source cells overlapping each output cell, weighted by
    /// overlap length. Same width returns an exact copy, and constant rows
    /// stay exactly constant in both directions.
    pub fn resize_cols(&self, width: usize) -> Self {
        assert!(width > 0, "target width must be positive");
        if width == self.cols {
            return self.clone();
        }
        let mut out = Grid::zeros(self.rows, width);
        if width > self.cols {
            let taps = linear_taps(self.cols, width);
            for r in 0..self.rows {
                let src = self.row(r);
                for (dst, &(i0, i1, f)) in out.row_mut(r).iter_mut().zip(&taps) {
                    let a = src[i0];
                    *dst = a + f * (src[i1] - a);
                }
            }
        } else {
            let taps = area_taps(self.cols, width);
            for r in 0..self.rows {
                let src = self.row(r);
                for (dst, cell) in out.row_mut(r).iter_mut().zip(&taps) {
                    // Weighted mean written relative to the first sample so
                    // that equal inputs reproduce the input bit for bit.
                    let base = src[cell[0].0];
                    let mut acc = 0.0;
                    let mut wsum = 0.0;
                    for &(i, w) in cell {
                        acc += w * (src[i] - base);
                        wsum += w;
                    }
                    *dst = base + acc / wsum;
                }
            }
        }
        out
    }
}

fn linear_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|j| {
            let x = ((j as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = x.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}

fn area_taps(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|j| {
            let lo = j as f64 * scale;
            let hi = (j + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|i| {
                    let w = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                    (w > 0.0).then_some((i, w))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize) -> Grid {
        let data = (0..rows * cols).map(|i| (i % cols) as f64).collect();
        Grid::new(rows, cols, data).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Grid::new(2, 2, vec![0.0; 3]), Err(Error::Shape(_))));
        assert!(matches!(Grid::new(0, 2, vec![]), Err(Error::Size(_))));
        assert!(Grid::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn constants_survive_resampling_exactly() {
        let g = Grid::filled(3, 37, 0.1);
        for w in [5, 24, 36, 37, 38, 100] {
            let down_up = g.resize_cols(w).resize_cols(37);
            assert_eq!(down_up, g, "width {w}");
        }
    }

    #[test]
    fn downsample_by_two_averages_pairs() {
        let g = ramp(1, 8);
        let d = g.resize_cols(4);
        assert_eq!(d.row(0), &[0.5, 2.5, 4.5, 6.5]);
    }

    #[test]
    fn upsample_preserves_linear_ramp_interior() {
        let g = ramp(1, 4);
        let u = g.resize_cols(8);
        // Pixel-center mapping: x = (j + 0.5) / 2 - 0.5.
        let expected = [0.0, 0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.0];
        for (a, b) in u.row(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn area_weights_cover_source() {
        for (src, dst) in [(256, 192), (61, 46), (10, 3)] {
            let total: f64 = area_taps(src, dst).iter().flatten().map(|&(_, w)| w).sum();
            assert!((total - src as f64).abs() < 1e-9);
        }
    }
}
