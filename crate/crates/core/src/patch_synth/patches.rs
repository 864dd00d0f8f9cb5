use crate::error::{Error, Result};
use crate::grid::Grid;

/// Overlapping windows of a grid, each flattened row-major into one row of
/// `patches`. Patch height is `min(p, grid_height)`, width is `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSet {
    patches: Vec<f64>,
    count: usize,
    grid_height: usize,
    grid_width: usize,
    patch_height: usize,
    patch_width: usize,
    stride: usize,
}

impl PatchSet {
    /// Wraps raw patch vectors with no grid geometry attached.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.is_empty() || dim == 0 {
            return Err(Error::Data("patch set is empty".into()));
        }
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Shape("patch vectors differ in dimension".into()));
        }
        Ok(Self {
            patches: vectors.concat(),
            count: vectors.len(),
            grid_height: 0,
            grid_width: 0,
            patch_height: 1,
            patch_width: dim,
            stride: 1,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.patch_height * self.patch_width
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.patches[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.patches.chunks_exact(self.dim())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.patches
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_height, self.grid_width)
    }

    pub fn patch_shape(&self) -> (usize, usize) {
        (self.patch_height, self.patch_width)
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Same geometry, new patch contents.
    pub(crate) fn with_patches(&self, patches: Vec<f64>) -> Self {
        debug_assert_eq!(patches.len(), self.patches.len());
        Self {
            patches,
            ..self.clone()
        }
    }

    fn offsets(&self) -> (Vec<usize>, Vec<usize>) {
        offsets(self.grid_height, self.grid_width, self.patch_height, self.patch_width, self.stride)
    }
}

fn offsets(h: usize, w: usize, ph: usize, pw: usize, stride: usize) -> (Vec<usize>, Vec<usize>) {
    (
        (0..=h - ph).step_by(stride).collect(),
        (0..=w - pw).step_by(stride).collect(),
    )
}

/// All `min(p, H) × p` windows at offsets that are multiples of `stride`,
/// enumerated row-major by offset.
pub fn extract_patches(grid: &Grid, p: usize, stride: usize) -> Result<PatchSet> {
    if p == 0 || stride == 0 {
        return Err(Error::Parameter("patch size and stride must be positive".into()));
    }
    let (h, w) = (grid.rows(), grid.cols());
    if p > w {
        return Err(Error::Size(format!("patch width {p} exceeds grid width {w}")));
    }
    let ph = p.min(h);
    let (rows, cols) = offsets(h, w, ph, p, stride);
    let count = rows.len() * cols.len();
    let mut patches = Vec::with_capacity(count * ph * p);
    for &r in &rows {
        for &c in &cols {
            for dr in 0..ph {
                patches.extend_from_slice(&grid.row(r + dr)[c..c + p]);
            }
        }
    }
    Ok(PatchSet {
        patches,
        count,
        grid_height: h,
        grid_width: w,
        patch_height: ph,
        patch_width: p,
        stride,
    })
}

/// Averages every patch entry back onto the grid it came from.
pub fn fold_patches(ps: &PatchSet) -> Result<Grid> {
    let (h, w) = ps.grid_shape();
    if h == 0 || w == 0 {
        return Err(Error::State("patch set has no source-grid geometry".into()));
    }
    let (ph, pw) = ps.patch_shape();
    let (rows, cols) = ps.offsets();
    // Per pixel: the first value seen, the sum of deviations from it, and the
    // number of contributions. Identical copies then fold back bit-exactly.
    let mut first = vec![f64::NAN; h * w];
    let mut dev = vec![0.0; h * w];
    let mut hits = vec![0u32; h * w];
    let mut patches = ps.iter();
    for &r in &rows {
        for &c in &cols {
            let patch = patches.next().expect("patch count matches geometry");
            for dr in 0..ph {
                let base = (r + dr) * w + c;
                for (dc, &v) in patch[dr * pw..(dr + 1) * pw].iter().enumerate() {
                    let idx = base + dc;
                    if hits[idx] == 0 {
                        first[idx] = v;
                    } else {
                        dev[idx] += v - first[idx];
                    }
                    hits[idx] += 1;
                }
            }
        }
    }
    if let Some(idx) = hits.iter().position(|&n| n == 0) {
        return Err(Error::Coverage {
            row: idx / w,
            col: idx % w,
        });
    }
    let data = first
        .iter()
        .zip(&dev)
        .zip(&hits)
        .map(|((&f, &d), &n)| f + d / n as f64)
        .collect();
    Grid::new(h, w, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(h: usize, w: usize) -> Grid {
        Grid::new(h, w, (0..h * w).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn whole_grid_single_patch() {
        let g = numbered(4, 4);
        let ps = extract_patches(&g, 4, 1).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.patch(0), g.as_slice());
        assert_eq!(fold_patches(&ps).unwrap(), g);
    }

    #[test]
    fn patch_counts() {
        let g = numbered(8, 30);
        let ps = extract_patches(&g, 7, 1).unwrap();
        assert_eq!(ps.len(), (8 - 7 + 1) * (30 - 7 + 1));
        assert_eq!(ps.dim(), 49);
        // Short grids clip the patch height.
        let g = numbered(3, 10);
        let ps = extract_patches(&g, 5, 1).unwrap();
        assert_eq!(ps.patch_shape(), (3, 5));
        assert_eq!(ps.len(), 6);
        assert_eq!(ps.patch(1), &[1., 2., 3., 4., 5., 11., 12., 13., 14., 15., 21., 22., 23., 24., 25.]);
    }

    #[test]
    fn oversize_patch_is_rejected() {
        assert!(matches!(extract_patches(&numbered(4, 4), 5, 1), Err(Error::Size(_))));
        assert!(extract_patches(&numbered(4, 4), 2, 0).is_err());
    }

    #[test]
    fn strided_extraction_can_leave_gaps() {
        let ps = extract_patches(&numbered(2, 7), 2, 3).unwrap();
        assert_eq!(ps.len(), 2);
        assert!(matches!(fold_patches(&ps), Err(Error::Coverage { row: 0, col: 2 })));
        let ps = extract_patches(&numbered(2, 9), 3, 3).unwrap();
        assert_eq!(ps.len(), 3);
        assert_eq!(fold_patches(&ps).unwrap(), numbered(2, 9));
    }

    #[test]
    fn constant_patches_fold_to_constant() {
        let g = Grid::filled(8, 20, 0.3);
        let ps = extract_patches(&g, 7, 1).unwrap();
        let ps = ps.with_patches(vec![0.7; ps.as_slice().len()]);
        assert_eq!(fold_patches(&ps).unwrap(), Grid::filled(8, 20, 0.7));
    }

    #[test]
    fn raw_vectors_cannot_fold() {
        let ps = PatchSet::from_vectors(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(fold_patches(&ps), Err(Error::State(_))));
        assert!(PatchSet::from_vectors(&[]).is_err());
        assert!(PatchSet::from_vectors(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
