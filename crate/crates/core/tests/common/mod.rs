#![allow(dead_code)]

use rand::Rng;
use rayreg::{DesignMatrix, LinkFunction, ModelSpec, RayleighMean};

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Log-link data set with `k - 1` U(0,1) covariates drawn from the model.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize, beta: &[f64]) -> ModelSpec {
    let k = beta.len();
    let cols: Vec<Vec<f64>> = (1..k).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    let design = if k == 1 {
        DesignMatrix::from_columns(&[vec![1.0; n]]).unwrap()
    } else {
        DesignMatrix::with_intercept(&cols).unwrap()
    };
    let y = (0..n)
        .map(|i| {
            let eta = beta[0] + (1..k).map(|j| beta[j] * cols[j - 1][i]).sum::<f64>();
            RayleighMean::new(eta.exp()).unwrap().sample(rng)
        })
        .collect();
    ModelSpec::new(design, LinkFunction::Log, y).unwrap()
}

/// Kolmogorov asymptotic p-value for the one-sample statistic `d` on `n`
/// points, with the Stephens small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Largest distance between the empirical CDF of `xs` and `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
