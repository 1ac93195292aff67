mod common;

use common::random_spec;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use rayreg::estimation::{fit_wmle_from, maximize_weighted, score, weighted_loglik};
use rayreg::{fit_mle, fit_wmle, rng, DesignMatrix, LinkFunction, ModelSpec, RobustConfig};

fn draw_beta<R: Rng>(r: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| r.random_range(-1.0..1.0)).collect()
}

#[test]
fn score_matches_central_differences() {
    let mut r = rng::stream(5, 0);
    for case in 0..50 {
        let k = 1 + case % 3;
        let n = r.random_range(20..200);
        let truth = draw_beta(&mut r, k);
        let spec = random_spec(&mut r, n, &truth);
        let beta = DVector::from_vec(draw_beta(&mut r, k));
        let w = DVector::from_fn(n, |_, _| if r.random::<f64>() < 0.2 { r.random::<f64>() } else { 1.0 });
        let analytic = score(&spec, &beta, &w).unwrap();
        let fd = DVector::from_fn(k, |j, _| {
            let h = 1e-5 * beta[j].abs().max(1.0);
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[j] += h;
            minus[j] -= h;
            (weighted_loglik(&spec, &plus, &w).unwrap() - weighted_loglik(&spec, &minus, &w).unwrap()) / (2.0 * h)
        });
        let rel = (&analytic - &fd).amax() / analytic.amax().max(1.0);
        assert!(rel <= 1e-5, "case {case}: analytic {analytic} fd {fd}");
    }
}

#[test]
fn score_vanishes_at_optimum() {
    let mut r = rng::stream(6, 0);
    let cfg = RobustConfig::default();
    for case in 0..50 {
        let k = 1 + case % 3;
        let n = r.random_range(50..600);
        let truth = draw_beta(&mut r, k);
        let spec = random_spec(&mut r, n, &truth);
        let mle = fit_mle(&spec, &cfg).unwrap();
        let ones = DVector::from_element(n, 1.0);
        let u = score(&spec, &mle.beta_hat, &ones).unwrap();
        assert!(mle.converged && u.amax() <= 1e-6, "case {case}: MLE |U| = {:e}", u.amax());
        let wmle = fit_wmle_from(&spec, &cfg, mle).unwrap();
        let u = score(&spec, &wmle.beta_hat, &wmle.weights).unwrap();
        assert!(wmle.converged && u.amax() <= 1e-6, "case {case}: WMLE |U| = {:e}", u.amax());
    }
}

#[test]
fn intercept_only_matches_closed_form() {
    let mut r = rng::stream(7, 0);
    for n in [20, 100, 1000] {
        let spec = random_spec(&mut r, n, &[0.4]);
        let fit = fit_mle(&spec, &RobustConfig::default()).unwrap();
        let y = spec.response();
        let closed = (std::f64::consts::PI * y.dot(y) / (4.0 * n as f64)).sqrt().ln();
        assert!((fit.beta_hat[0] - closed).abs() <= 1e-8, "N {n}: {} vs {closed}", fit.beta_hat[0]);
    }
}

#[test]
fn zero_reweighting_is_bitwise_mle() {
    let mut r = rng::stream(8, 0);
    let spec = random_spec(&mut r, 300, &[0.5, 0.15]);
    let cfg = RobustConfig { reweight_iterations: 0, ..RobustConfig::default() };
    let a = fit_mle(&spec, &cfg).unwrap();
    let b = fit_wmle(&spec, &cfg).unwrap();
    assert_eq!(a.beta_hat.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
               b.beta_hat.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a, b);
}

#[test]
fn weighted_likelihood_does_not_decrease_along_the_run() {
    let mut r = rng::stream(9, 0);
    let clean = random_spec(&mut r, 400, &[0.5, 0.15]);
    let mut y = clean.response().as_slice().to_vec();
    y[..20].fill(10.0);
    let spec = clean.with_response(y).unwrap();
    let cfg = RobustConfig::default();
    let mle = fit_mle(&spec, &cfg).unwrap();
    let w = rayreg::estimation::compute_weights(&spec, &mle.mu_hat, cfg.delta);
    let out = maximize_weighted(&spec, &w, mle.beta_hat.clone(), &cfg).unwrap();
    assert!(out.trace.windows(2).all(|p| p[1] >= p[0] - 1e-11 * p[0].abs()));
    assert!(out.f >= weighted_loglik(&spec, &mle.beta_hat, &w).unwrap());
}

#[test]
fn identity_link_fit_converges() {
    let mut r = rng::stream(10, 0);
    let x: Vec<f64> = (0..400).map(|_| r.random::<f64>()).collect();
    let y = x.iter().map(|&xi| rayreg::RayleighMean::new(2.0 + 1.5 * xi).unwrap().sample(&mut r)).collect();
    let spec = ModelSpec::new(DesignMatrix::with_intercept(&[x]).unwrap(), LinkFunction::Identity, y).unwrap();
    let fit = fit_wmle(&spec, &RobustConfig::default()).unwrap();
    assert!(fit.converged);
    assert!((fit.beta_hat[0] - 2.0).abs() < 0.5 && (fit.beta_hat[1] - 1.5).abs() < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_is_permutation_invariant(seed in 0u64..1000, shift in 1usize..199) {
        let mut r = rng::stream(seed, 1);
        let spec = random_spec(&mut r, 200, &[0.5, 0.15]);
        let perm: Vec<usize> = (0..200).map(|i| (i + shift) % 200).collect();
        let x = spec.design().select_rows(&perm).unwrap();
        let y = perm.iter().map(|&i| spec.response()[i]).collect();
        let permuted = ModelSpec::new(x, LinkFunction::Log, y).unwrap();
        let cfg = RobustConfig::default();
        let a = fit_wmle(&spec, &cfg).unwrap();
        let b = fit_wmle(&permuted, &cfg).unwrap();
        prop_assert!((&a.beta_hat - &b.beta_hat).amax() <= 1e-6);
        prop_assert_eq!(a.n_downweighted(), b.n_downweighted());
    }

    #[test]
    fn optimum_does_not_depend_on_start(seed in 0u64..1000, s0 in -2.0f64..2.0, s1 in -2.0f64..2.0) {
        let mut r = rng::stream(seed, 2);
        let spec = random_spec(&mut r, 300, &[0.5, 0.15]);
        let cfg = RobustConfig::default();
        let ones = DVector::from_element(300, 1.0);
        let reference = fit_mle(&spec, &cfg).unwrap();
        let out = maximize_weighted(&spec, &ones, DVector::from_vec(vec![s0, s1]), &cfg).unwrap();
        prop_assert!(out.converged());
        prop_assert!((&out.x - &reference.beta_hat).amax() <= 1e-6);
    }
}
