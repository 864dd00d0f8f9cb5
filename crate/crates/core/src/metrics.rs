//! Improved precision and recall.
//!
//! Each sample set defines a manifold estimate: the union of balls centred
//! on its points, each ball reaching the point's k-th nearest neighbour in
//! the same set. Precision is the share of generated samples inside the
//! real manifold and recall the share of real samples inside the generated
//! one. Features are the raw series values and distances are Euclidean and
//! exact. A point on a ball's boundary counts as inside.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    data: Vec<f64>,
    dim: usize,
    pub label: String,
}

impl FeatureSet {
    pub fn new(rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 {
            return Err(Error::Size("feature set is empty".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("feature vectors differ in dimension".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("feature set contains non-finite values".into()));
        }
        Ok(Self {
            data: rows.concat(),
            dim,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn vectors(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub k: usize,
    pub m_real: usize,
    pub m_fake: usize,
    /// Free-form echo of whatever configuration produced the sets.
    pub config: String,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(fs: &FeatureSet, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    if fs.len() <= k {
        return Err(Error::Size(format!(
            "{} vectors in `{}` cannot supply {k} neighbours each",
            fs.len(),
            fs.label
        )));
    }
    Ok(())
}

/// Squared distance from each point to its k-th nearest other point.
fn knn_sq_radii(fs: &FeatureSet, k: usize) -> Vec<f64> {
    let n = fs.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let a = fs.vector(i);
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq_dist(a, fs.vector(j))).collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

/// Distance from each vector to its k-th nearest neighbour, itself excluded.
pub fn knn_radii(fs: &FeatureSet, k: usize) -> Result<Vec<f64>> {
    check_k(fs, k)?;
    Ok(knn_sq_radii(fs, k).into_iter().map(f64::sqrt).collect())
}

/// Share of `probe` vectors inside the manifold of `support`.
fn coverage(support: &FeatureSet, sq_radii: &[f64], probe: &FeatureSet) -> f64 {
    let inside = probe
        .vectors()
        .collect::<Vec<_>>()
        .par_iter()
        .filter(|p| {
            support
                .vectors()
                .zip(sq_radii)
                .any(|(s, &r2)| sq_dist(p, s) <= r2)
        })
        .count();
    inside as f64 / probe.len() as f64
}

pub fn precision_recall(real: &FeatureSet, fake: &FeatureSet, k: usize) -> Result<EvalReport> {
    check_k(real, k)?;
    check_k(fake, k)?;
    if real.dim() != fake.dim() {
        return Err(Error::Shape(format!(
            "real vectors have dimension {}, fake {}",
            real.dim(),
            fake.dim()
        )));
    }
    let real_r2 = knn_sq_radii(real, k);
    let fake_r2 = knn_sq_radii(fake, k);
    Ok(EvalReport {
        precision: coverage(real, &real_r2, fake),
        recall: coverage(fake, &fake_r2, real),
        k,
        m_real: real.len(),
        m_fake: fake.len(),
        config: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(rows: &[&[f64]]) -> FeatureSet {
        FeatureSet::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), "t").unwrap()
    }

    #[test]
    fn collinear_radii() {
        let set = fs(&[&[0.0], &[1.0], &[3.0]]);
        assert_eq!(knn_radii(&set, 1).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(knn_radii(&set, 2).unwrap(), vec![3.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicates_have_zero_radius() {
        let set = fs(&[&[1.0, 2.0], &[1.0, 2.0], &[5.0, 5.0], &[5.0, 5.0]]);
        assert_eq!(knn_radii(&set, 1).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn too_few_points() {
        let set = fs(&[&[0.0], &[1.0]]);
        assert!(matches!(knn_radii(&set, 2), Err(Error::Size(_))));
        assert!(knn_radii(&set, 0).is_err());
    }

    #[test]
    fn identical_sets_score_one() {
        let set = fs(&[&[0.0, 1.0], &[2.0, 0.5], &[3.0, 3.0], &[-1.0, 4.0]]);
        let r = precision_recall(&set, &set, 2).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
    }

    #[test]
    fn disjoint_sets_score_zero() {
        let real = fs(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let fake = fs(&[&[1e6, 0.0], &[1e6 + 1.0, 0.0], &[1e6, 1.0], &[1e6 + 1.0, 1.0]]);
        let r = precision_recall(&real, &fake, 1).unwrap();
        assert_eq!((r.precision, r.recall), (0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = fs(&[&[0.0], &[1.0], &[2.0]]);
        let b = fs(&[&[0.0, 1.0], &[1.0, 1.0], &[2.0, 1.0]]);
        assert!(matches!(precision_recall(&a, &b, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_bad_features() {
        assert!(FeatureSet::new(&[vec![f64::NAN]], "x").is_err());
        assert!(FeatureSet::new(&[], "x").is_err());
        assert!(FeatureSet::new(&[vec![1.0], vec![1.0, 2.0]], "x").is_err());
    }
}
