//! Sliced optimal transport between patch multisets.
//!
//! Both operations draw `num_projections` Gaussian directions normalized to
//! unit length from a ChaCha stream seeded by `seed`, project every patch,
//! and compare the two projected multisets through their sorted empirical
//! quantile functions. Sets of different sizes are aligned at the quantile
//! levels `(r + ½)/n`, which reduces to plain rank matching when the sizes
//! agree.

use rand_distr::{Distribution, StandardNormal};

use super::patches::PatchSet;
use crate::error::{Error, Result};
use crate::seed;

/// `count` unit vectors of dimension `dim`, flattened row-major.
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(dim * count);
    while out.len() < dim * count {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.extend(v.iter().map(|x| x / norm));
        }
    }
    out
}

/// Index into a sorted sample of size `n` for quantile level `(r + ½)/q`.
#[inline]
pub(crate) fn quantile_index(r: usize, n: usize, q: usize) -> usize {
    ((2 * r + 1) * n) / (2 * q)
}

fn check_pair(a: &PatchSet, b: &PatchSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("patch sets must be non-empty".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("patch dimensions {} and {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Projections laid out direction-major: `out[p * n + i] = ⟨patch_i, u_p⟩`.
fn project(ps: &PatchSet, dirs: &[f64]) -> Vec<f64> {
    let d = ps.dim();
    let n = ps.len();
    let np = dirs.len() / d;
    let mut out = vec![0.0; np * n];
    // SAFETY: `ps` holds n×d values with row stride d, `dirs` holds np×d
    // values read as a d×np matrix, and `out` holds np×n values written with
    // column stride n; every index the kernel touches lies inside its buffer.
    // (n × d) · (d × np), written column-major so each direction is contiguous.
    unsafe {
        matrixmultiply::dgemm(
            n, d, np, 1.0,
            ps.as_slice().as_ptr(), d as isize, 1,
            dirs.as_ptr(), 1, d as isize,
            0.0,
            out.as_mut_ptr(), 1, n as isize,
        );
    }
    out
}

/// Order-preserving map from `f64` (under `total_cmp`) to `u64`.
#[inline]
fn key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 { !b } else { b | (1 << 63) }
}

#[inline]
fn unkey(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut keys: Vec<u64> = v.iter().map(|&x| key(x)).collect();
    keys.sort_unstable();
    keys.into_iter().map(unkey).collect()
}

/// Mean over projections of the squared 1D Wasserstein-2 distance between
/// the projected multisets.
pub fn swd(a: &PatchSet, b: &PatchSet, num_projections: usize, seed: u64) -> Result<f64> {
    check_pair(a, b)?;
    if num_projections == 0 {
        return Err(Error::Parameter("num_projections must be positive".into()));
    }
    let dirs = random_directions(a.dim(), num_projections, seed);
    Ok(swd_with_directions(a, b, &dirs))
}

pub(crate) fn swd_with_directions(a: &PatchSet, b: &PatchSet, dirs: &[f64]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let q = na.max(nb);
    let pa = project(a, dirs);
    let pb = project(b, dirs);
    let np = dirs.len() / a.dim();
    let mut total = 0.0;
    for p in 0..np {
        let sa = sorted(&pa[p * na..(p + 1) * na]);
        let sb = sorted(&pb[p * nb..(p + 1) * nb]);
        let w2: f64 = (0..q)
            .map(|r| {
                let d = sa[quantile_index(r, na, q)] - sb[quantile_index(r, nb, q)];
                d * d
            })
            .sum();
        total += w2 / q as f64;
    }
    total / np as f64
}

/// One sliced optimal-transport step of `synth` toward `target`.
///
/// For each direction `u`, the synth patch of rank `r` is displaced along
/// `u` by the gap between the target quantile at its level and its own
/// projection. The per-direction displacements are averaged.
pub fn ot_patch_update(synth: &PatchSet, target: &PatchSet, num_projections: usize, seed: u64) -> Result<PatchSet> {
    check_pair(synth, target)?;
    if num_projections == 0 {
        return Err(Error::Parameter("num_projections must be positive".into()));
    }
    let dirs = random_directions(synth.dim(), num_projections, seed);
    Ok(ot_update_with_directions(synth, target, &dirs))
}

pub(crate) fn ot_update_with_directions(synth: &PatchSet, target: &PatchSet, dirs: &[f64]) -> PatchSet {
    let d = synth.dim();
    let (n, m) = (synth.len(), target.len());
    let np = dirs.len() / d;
    let ps = project(synth, dirs);
    let pt = project(target, dirs);
    // delta[p * n + i]: displacement of synth patch i along direction p.
    let mut delta = vec![0.0; np * n];
    // Ties in projection are broken by patch index.
    let mut order: Vec<u128> = Vec::with_capacity(n);
    for p in 0..np {
        let own = &ps[p * n..(p + 1) * n];
        let goal = sorted(&pt[p * m..(p + 1) * m]);
        order.clear();
        order.extend(own.iter().enumerate().map(|(i, &x)| (u128::from(key(x)) << 64) | i as u128));
        order.sort_unstable();
        let out = &mut delta[p * n..(p + 1) * n];
        for (rank, &packed) in order.iter().enumerate() {
            let idx = packed as u64 as usize;
            out[idx] = goal[quantile_index(rank, m, n)] - own[idx];
        }
    }
    let mut updated = synth.as_slice().to_vec();
    // SAFETY: `delta` is np×n laid out with column stride n, `dirs` is np×d
    // row-major, and `updated` is n×d row-major; all accesses are in bounds.
    // updated += (1/np) · delta(n × np) · dirs(np × d)
    unsafe {
        matrixmultiply::dgemm(
            n, np, d, 1.0 / np as f64,
            delta.as_ptr(), 1, n as isize,
            dirs.as_ptr(), d as isize, 1,
            1.0,
            updated.as_mut_ptr(), d as isize, 1,
        );
    }
    synth.with_patches(updated)
}
