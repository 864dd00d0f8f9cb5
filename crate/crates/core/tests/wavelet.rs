use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use scalogen::processes::TimeSeries;
use scalogen::wavelet::{cwt, cwt_values, denormalize, icwt, normalize, CwtOperator, Scalogram, WaveletConfig};
use scalogen::Grid;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}

fn small_cfg() -> WaveletConfig {
    WaveletConfig {
        scales: vec![1.0, 2.0, 4.0, 8.0],
        ..Default::default()
    }
}

fn series(x: Vec<f64>) -> TimeSeries {
    TimeSeries::new(x, 1.0).unwrap()
}

fn invert(x: &[f64], cfg: &WaveletConfig) -> Vec<f64> {
    let sc = cwt(&series(x.to_vec()), cfg).unwrap();
    icwt(&sc, x.len(), cfg).unwrap().into_values()
}

fn cosine(period: f64, len: usize) -> Vec<f64> {
    (0..len).map(|k| (2.0 * std::f64::consts::PI * k as f64 / period).cos()).collect()
}

#[test]
fn cosine_peaks_in_matching_scale_row() {
    // Brute-force oracle over all eight rows at columns 64..192: scale 32,
    // with interior peak |coefficient| 3.23602170.
    let cfg = WaveletConfig::default();
    let g = cwt_values(&cosine(32.0, 256), &cfg).unwrap();
    let peaks: Vec<f64> = (0..8)
        .map(|r| g.row(r)[64..192].iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let best = (0..8).max_by(|&a, &b| peaks[a].total_cmp(&peaks[b])).unwrap();
    assert_eq!(cfg.scales[best], 32.0);
    assert!((peaks[best] - 3.23602170).abs() < 1e-7);
}

#[test]
fn cosine_round_trip() {
    let cfg = WaveletConfig::default();
    let x = cosine(32.0, 256);
    let back = invert(&x, &cfg);
    let err = rel_err(&back, &x);
    assert!(err <= 0.05, "relative error {err}");
}

#[test]
fn inverse_matches_dense_least_squares_oracle() {
    // Independent route: columns from impulse responses of the forward
    // transform, solved through the SVD of the stacked ridge system.
    let cfg = small_cfg();
    let len = 40;
    let rows = cfg.scales.len() * len;
    let mut a = DMatrix::zeros(rows + len, len);
    for col in 0..len {
        let mut e = vec![0.0; len];
        e[col] = 1.0;
        let g = cwt_values(&e, &cfg).unwrap();
        for (r, v) in g.as_slice().iter().enumerate() {
            a[(r, col)] = *v;
        }
        a[(rows + col, col)] = cfg.ridge.sqrt();
    }
    let y: Vec<f64> = (0..rows).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
    let mut rhs = DVector::zeros(rows + len);
    rhs.rows_mut(0, rows).copy_from_slice(&y);
    let oracle = a.svd(true, true).solve(&rhs, 1e-300).unwrap();
    let sc = Scalogram::new(Grid::new(cfg.scales.len(), len, y).unwrap(), cfg.scales.clone(), None).unwrap();
    let ours = icwt(&sc, len, &cfg).unwrap();
    assert!(rel_err(ours.values(), oracle.as_slice()) < 1e-8);
}

#[test]
fn operator_rows_equal_forward_transform() {
    let cfg = small_cfg();
    let op = CwtOperator::new(&cfg, 20).unwrap();
    let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
    let via_matrix = op.matrix() * DVector::from_column_slice(&x);
    let direct = cwt_values(&x, &cfg).unwrap();
    for (a, b) in via_matrix.iter().zip(direct.as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_scalogram_inverts_to_zero() {
    let cfg = WaveletConfig::default();
    let sc = Scalogram::new(Grid::zeros(8, 64), cfg.scales.clone(), None).unwrap();
    let x = icwt(&sc, 64, &cfg).unwrap();
    assert!(x.values().iter().all(|v| v.abs() <= 1e-9));
}

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cwt_is_linear(x in vector(48), y in vector(48), a in -5.0f64..5.0) {
        let cfg = small_cfg();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let lhs = cwt_values(&combo, &cfg).unwrap();
        let (gx, gy) = (cwt_values(&x, &cfg).unwrap(), cwt_values(&y, &cfg).unwrap());
        let rhs: Vec<f64> = gx.as_slice().iter().zip(gy.as_slice()).map(|(p, q)| a * p + q).collect();
        prop_assert!(rel_err(lhs.as_slice(), &rhs) <= 1e-9);
    }

    #[test]
    fn cwt_scales_by_constant(x in vector(32)) {
        let cfg = small_cfg();
        let scaled: Vec<f64> = x.iter().map(|v| -3.5 * v).collect();
        let a = cwt_values(&scaled, &cfg).unwrap();
        let b = cwt_values(&x, &cfg).unwrap().map(|v| -3.5 * v);
        prop_assert!(rel_err(a.as_slice(), b.as_slice()) <= 1e-12);
    }

    #[test]
    fn icwt_cwt_is_additive(x in vector(48), y in vector(48)) {
        let cfg = small_cfg();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        let lhs = invert(&sum, &cfg);
        let rhs: Vec<f64> = invert(&x, &cfg).iter().zip(invert(&y, &cfg)).map(|(p, q)| p + q).collect();
        prop_assert!(rel_err(&lhs, &rhs) <= 1e-9);
    }

    #[test]
    fn projection_is_idempotent(y in vector(4 * 48)) {
        // The ridge term shrinks every re-application by λ(AᵀA + λI)⁻¹, so
        // exact idempotence is checked on the unregularized projection.
        let cfg = WaveletConfig { ridge: 0.0, ..small_cfg() };
        let sc = Scalogram::new(Grid::new(4, 48, y).unwrap(), cfg.scales.clone(), None).unwrap();
        let once = icwt(&sc, 48, &cfg).unwrap().into_values();
        let twice = invert(&once, &cfg);
        prop_assert!(rel_err(&twice, &once) <= 1e-9);
    }

    #[test]
    fn shape_is_scales_by_length(len in 2usize..200) {
        let cfg = WaveletConfig::default();
        let x: Vec<f64> = (0..len).map(|i| (i as f64).sqrt()).collect();
        let sc = cwt(&series(x), &cfg).unwrap();
        prop_assert_eq!((sc.num_scales(), sc.width()), (8, len));
    }

    #[test]
    fn normalize_round_trip(x in vector(40)) {
        let cfg = small_cfg();
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
        let sc = cwt(&series(x), &cfg).unwrap();
        let n = normalize(&sc).unwrap();
        prop_assert_eq!(n.coeffs().min(), 0.0);
        prop_assert_eq!(n.coeffs().max(), 1.0);
        let back = denormalize(&n).unwrap();
        let scale = sc.coeffs().as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.coeffs().as_slice().iter().zip(sc.coeffs().as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}
