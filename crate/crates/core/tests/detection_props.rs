use proptest::prelude::*;
use rand::Rng;
use rayreg::detection::scene::{synth_scene, SceneParams};
use rayreg::detection::{
    detect, residual_field, threshold_residuals, DetectorConfig, ImageMatrix, Rect, Tail,
};
use rayreg::error::Error;
use rayreg::{rng, LinkFunction, RayleighMean, RobustConfig};
use rayreg::inference::quantile_residual;

fn mle_config() -> RobustConfig {
    RobustConfig { reweight_iterations: 0, ..RobustConfig::default() }
}

#[test]
fn synthetic_scene_detection() {
    let p = SceneParams::default();
    let s = synth_scene(&p).unwrap();
    let cfg = DetectorConfig::default();
    let mut w = detect(&s.interest, &s.references, &s.training_region, &cfg, &RobustConfig::default()).unwrap();
    let mut m = detect(&s.interest, &s.references, &s.training_region, &cfg, &mle_config()).unwrap();
    let sw = w.score_against(&s.truth, &cfg);
    let sm = m.score_against(&s.truth, &cfg);
    assert!(sw.hits >= 22 && sw.false_alarms <= 5, "WMLE {sw:?}");
    assert!(sm.false_alarms > sw.false_alarms, "MLE {sm:?} vs WMLE {sw:?}");
    assert_eq!(sw.hits + sw.missed, 25);
}

#[test]
fn detection_is_deterministic() {
    let s = synth_scene(&SceneParams::default()).unwrap();
    let cfg = DetectorConfig::default();
    let a = detect(&s.interest, &s.references, &s.training_region, &cfg, &RobustConfig::default()).unwrap();
    let b = detect(&s.interest, &s.references, &s.training_region, &cfg, &RobustConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noise_free_image_has_no_clusters() {
    // Noise-free pixels at a fixed quantile of their law give residuals far inside the limit.
    let mut r = rng::stream(3, 0);
    let cov = ImageMatrix::new(60, 60, (0..3600).map(|_| r.random::<f64>()).collect()).unwrap();
    let median = |mu: f64| RayleighMean::new(mu).unwrap().quantile(0.5).unwrap();
    let interest = ImageMatrix::from_fn(60, 60, |i, j| median((0.1 + 0.5 * cov.get(i, j)).exp())).unwrap();
    let region = Rect { row: 0, col: 0, rows: 60, cols: 60 };
    let res = detect(&interest, &[cov], &region, &DetectorConfig::default(), &RobustConfig::default()).unwrap();
    assert!(res.residuals.pixels().iter().all(|v| v.abs() < 1.0));
    assert_eq!(res.raw_mask.count(), 0);
    assert!(res.clusters.is_empty());
}

#[test]
fn tiny_training_region_is_refused() {
    let s = synth_scene(&SceneParams::default()).unwrap();
    let region = Rect { row: 50, col: 50, rows: 1, cols: 1 };
    let err = detect(&s.interest, &s.references, &region, &DetectorConfig::default(), &RobustConfig::default());
    assert!(matches!(err, Err(Error::DegenerateDesign(_))), "{err:?}");
}

#[test]
fn residual_field_uses_row_major_pixels() {
    let mut r = rng::stream(4, 0);
    let img = ImageMatrix::new(3, 4, (0..12).map(|_| 0.5 + r.random::<f64>()).collect()).unwrap();
    let beta = nalgebra::DVector::from_vec(vec![0.2]);
    let field = residual_field(&img, &[], &beta, LinkFunction::Log).unwrap();
    for i in 0..3 {
        for j in 0..4 {
            assert_eq!(field.get(i, j), quantile_residual(img.get(i, j), 0.2f64.exp()).0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_the_limit_never_adds_pixels(seed in 0u64..10_000, l in 0.5f64..4.0, dl in 0.0f64..2.0) {
        let mut r = rng::stream(seed, 5);
        let field = ImageMatrix::new(20, 20, (0..400).map(|_| 8.0 * r.random::<f64>() - 4.0).collect()).unwrap();
        for tail in [Tail::Both, Tail::Upper] {
            prop_assert!(threshold_residuals(&field, l + dl, tail).count() <= threshold_residuals(&field, l, tail).count());
        }
    }

    #[test]
    fn threshold_count_is_transposition_invariant(seed in 0u64..10_000, rows in 1usize..30, cols in 1usize..30) {
        let mut r = rng::stream(seed, 6);
        let field = ImageMatrix::new(rows, cols, (0..rows * cols).map(|_| 8.0 * r.random::<f64>() - 4.0).collect()).unwrap();
        let t = field.transpose();
        let a = threshold_residuals(&field, 3.0, Tail::Both);
        let b = threshold_residuals(&t, 3.0, Tail::Both);
        prop_assert_eq!(a.count(), b.count());
        for i in 0..rows {
            for j in 0..cols {
                prop_assert_eq!(a.get(i, j), b.get(j, i));
            }
        }
    }
}
