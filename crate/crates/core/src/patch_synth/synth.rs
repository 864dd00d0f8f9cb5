use rand_distr::{Distribution, Normal};

use super::patches::{extract_patches, fold_patches, PatchSet};
use super::pyramid::build_pyramid;
use super::sliced::{ot_update_with_directions, random_directions, swd_with_directions};
use super::SynthConfig;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::seed;
use crate::wavelet::Scalogram;

const NOISE_STREAM: u64 = 0;
const STEP_STREAM: u64 = 1;
const PROBE_STREAM: u64 = 2;

/// Patch-distribution distance at the start and end of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTrace {
    pub width: usize,
    pub swd_start: f64,
    pub swd_end: f64,
}

/// `level` resized to `width` plus i.i.d. `N(0, sigma²)` noise.
pub fn noisy_canvas(level: &Grid, width: usize, sigma: f64, seed: u64) -> Result<Grid> {
    let mut canvas = level.resize_cols(width);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
        let mut rng = seed::rng(seed);
        for v in canvas.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(canvas)
}

/// Generates a new normalized scalogram whose patch statistics follow
/// `target` at every pyramid level.
pub fn synthesize(target: &Scalogram, cfg: &SynthConfig, seed: u64) -> Result<Scalogram> {
    run(target, cfg, seed, false).map(|(sc, _)| sc)
}

/// [`synthesize`] plus a per-level record of the sliced distance between
/// synthesis and target patches. Tracing does not alter the output.
pub fn synthesize_traced(target: &Scalogram, cfg: &SynthConfig, seed: u64) -> Result<(Scalogram, Vec<LevelTrace>)> {
    run(target, cfg, seed, true)
}

fn run(target: &Scalogram, cfg: &SynthConfig, seed: u64, trace: bool) -> Result<(Scalogram, Vec<LevelTrace>)> {
    cfg.validate()?;
    let norm = target
        .norm()
        .ok_or_else(|| Error::State("synthesis expects a normalized scalogram".into()))?;
    let pyramid = build_pyramid(target.coeffs(), cfg)?;
    let out_widths: Vec<usize> = pyramid.widths.iter().map(|&w| cfg.output_width(w)).collect();
    if out_widths[0] < cfg.patch_size {
        return Err(Error::Size(format!(
            "coarsest output width {} is smaller than the patch size {}",
            out_widths[0], cfg.patch_size
        )));
    }

    let mut canvas = noisy_canvas(
        &pyramid.levels[0],
        out_widths[0],
        cfg.noise_sigma,
        seed::derive_seed(seed, NOISE_STREAM),
    )?;
    let mut traces = Vec::new();
    for (lvl, level) in pyramid.levels.iter().enumerate() {
        if lvl > 0 {
            canvas = carry_up(&canvas, &pyramid.levels[lvl - 1], level, out_widths[lvl])?;
        }
        let target_patches = extract_patches(level, cfg.patch_size, cfg.stride)?;
        let probe = trace.then(|| {
            random_directions(
                target_patches.dim(),
                cfg.num_projections,
                seed::derive_path(seed, &[PROBE_STREAM, lvl as u64]),
            )
        });
        let swd_start = match &probe {
            Some(dirs) => swd_with_directions(&extract_patches(&canvas, cfg.patch_size, cfg.stride)?, &target_patches, dirs),
            None => 0.0,
        };
        for step in 0..cfg.steps_per_level {
            let dirs = random_directions(
                target_patches.dim(),
                cfg.num_projections,
                seed::derive_path(seed, &[STEP_STREAM, lvl as u64, step as u64]),
            );
            let synth: PatchSet = extract_patches(&canvas, cfg.patch_size, cfg.stride)?;
            let moved = ot_update_with_directions(&synth, &target_patches, &dirs);
            canvas = fold_patches(&moved)?;
            canvas.clamp(0.0, 1.0);
        }
        if let Some(dirs) = &probe {
            let swd_end = swd_with_directions(&extract_patches(&canvas, cfg.patch_size, cfg.stride)?, &target_patches, dirs);
            traces.push(LevelTrace {
                width: out_widths[lvl],
                swd_start,
                swd_end,
            });
        }
    }
    canvas.clamp(0.0, 1.0);
    let sc = Scalogram::new(canvas, target.scales().to_vec(), Some(norm))?;
    Ok((sc, traces))
}

/// Next-level canvas: the target level (stretched to the output width) plus
/// the upsampled deviation of the current synthesis from the coarser
/// target level. With an untouched synthesis the deviation is exactly zero
/// and the finer target level comes through unchanged.
fn carry_up(canvas: &Grid, coarse: &Grid, fine: &Grid, width: usize) -> Result<Grid> {
    let coarse_on_canvas = coarse.resize_cols(canvas.cols());
    let deviation = canvas.sub(&coarse_on_canvas)?.resize_cols(width);
    fine.resize_cols(width).add(&deviation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::NormParams;

    fn target(width: usize, seed: u64) -> Scalogram {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut data: Vec<f64> = (0..8 * width)
            .map(|i| ((i % width) as f64 * 0.3).sin() + 0.2 * normal.sample(&mut rng))
            .collect();
        let (lo, hi) = data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        data.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
        let g = Grid::new(8, width, data).unwrap();
        Scalogram::new(g, crate::wavelet::dyadic_scales(1, 8), Some(NormParams { lo, hi })).unwrap()
    }

    #[test]
    fn output_shape_and_range() {
        let t = target(64, 1);
        for f in [1.0, 2.0, 1.5] {
            let cfg = SynthConfig {
                retarget_factor: f,
                steps_per_level: 2,
                ..Default::default()
            };
            let out = synthesize(&t, &cfg, 3).unwrap();
            assert_eq!(out.coeffs().rows(), 8);
            assert_eq!(out.width(), (64.0 * f).round() as usize);
            assert!(out.coeffs().min() >= 0.0 && out.coeffs().max() <= 1.0);
            assert_eq!(out.norm(), t.norm());
        }
    }

    #[test]
    fn requires_normalized_input() {
        let t = target(32, 2);
        let raw = Scalogram::new(t.coeffs().clone(), t.scales().to_vec(), None).unwrap();
        assert!(matches!(synthesize(&raw, &SynthConfig::default(), 0), Err(Error::State(_))));
    }

    #[test]
    fn trace_does_not_change_output() {
        let t = target(48, 4);
        let cfg = SynthConfig {
            steps_per_level: 3,
            ..Default::default()
        };
        let a = synthesize(&t, &cfg, 9).unwrap();
        let (b, trace) = synthesize_traced(&t, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(trace.len(), 3);
        assert_eq!(trace.last().unwrap().width, 48);
    }

    #[test]
    fn different_seeds_differ() {
        let t = target(48, 5);
        let a = synthesize(&t, &SynthConfig::default(), 1).unwrap();
        let b = synthesize(&t, &SynthConfig::default(), 2).unwrap();
        assert_ne!(a, b);
    }
}
