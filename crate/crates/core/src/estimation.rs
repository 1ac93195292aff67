//! Maximum likelihood (MLE) and weighted maximum likelihood (WMLE) fitting
//! of the Rayleigh regression model.
//!
//! The WMLE down-weights observations whose fitted CDF value falls in either
//! `delta` tail. Weights come from a preliminary MLE fit and are then held
//! fixed while the weighted log-likelihood is maximized, starting from the
//! MLE solution.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dist::{cdf_raw, dlog_density_dmu, log_density};
use crate::error::{Error, Result};
use crate::inference::fisher_information;
use crate::optim::{self, BfgsOptions, BfgsOutcome};
use crate::regression::{LinkFunction, ModelSpec};

/// Estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustConfig {
    /// Tail probability delimiting full-weight observations, in (0, 0.5).
    pub delta: f64,
    /// Number of weight/refit rounds after the MLE. Zero gives the plain MLE.
    pub reweight_iterations: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub ll_rel_tol: f64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self { delta: 0.001, reweight_iterations: 1, max_iter: 500, grad_tol: 1e-6, ll_rel_tol: 1e-9 }
    }
}

impl RobustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 0.5), got {}", self.delta)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.grad_tol > 0.0) || !(self.ll_rel_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// The same settings with weighting disabled.
    pub fn mle(self) -> Self {
        Self { reweight_iterations: 0, ..self }
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            rel_tol: self.ll_rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Wmle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Wmle => "wmle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(Method::Mle),
            "wmle" | "robust" => Ok(Method::Wmle),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: DVector<f64>,
    pub coefficient_names: Vec<String>,
    /// Robustness weights, all one for the MLE.
    pub weights: DVector<f64>,
    pub mu_hat: DVector<f64>,
    /// Weighted log-likelihood at `beta_hat`.
    pub loglik: f64,
    pub fisher_info: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub std_errors: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `|score(beta_hat)|_inf`.
    pub grad_norm: f64,
    pub method: Method,
    pub link: LinkFunction,
}

impl FitResult {
    pub fn n_downweighted(&self) -> usize {
        self.weights.iter().filter(|&&w| w < 1.0).count()
    }
}

fn check_weights(spec: &ModelSpec, w: &DVector<f64>) -> Result<()> {
    if w.len() != spec.n_obs() {
        return Err(Error::Dimension(format!(
            "{} weights for {} observations",
            w.len(),
            spec.n_obs()
        )));
    }
    Ok(())
}

/// `sum_n w[n] log f(y[n]; mu[n])`.
pub fn weighted_loglik(spec: &ModelSpec, beta: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    check_weights(spec, w)?;
    let mu = spec.predict_mean(beta)?;
    Ok(loglik_at(spec.response(), &mu, w))
}

fn loglik_at(y: &DVector<f64>, mu: &DVector<f64>, w: &DVector<f64>) -> f64 {
    y.iter()
        .zip(mu.iter())
        .zip(w.iter())
        .filter(|(_, &wn)| wn != 0.0)
        .map(|((&yn, &mn), &wn)| wn * log_density(yn, mn))
        .sum()
}

/// Weighted score `X^T W T v`, with `T = diag(1 / g'(mu))` and
/// `v[n] = pi y^2 / (2 mu^3) - 2 / mu`.
pub fn score(spec: &ModelSpec, beta: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    check_weights(spec, w)?;
    let mu = spec.predict_mean(beta)?;
    Ok(score_at(spec, &mu, w))
}

fn score_at(spec: &ModelSpec, mu: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let link = spec.link();
    let y = spec.response();
    let z = DVector::from_fn(mu.len(), |n, _| {
        w[n] * link.dmu_deta(mu[n]) * dlog_density_dmu(y[n], mu[n])
    });
    spec.x().tr_mul(&z)
}

/// Robustness weights from reference means:
/// `F / delta` below `delta`, one in the middle, `(1 - F) / delta` above `1 - delta`.
pub fn compute_weights(spec: &ModelSpec, mu_ref: &DVector<f64>, delta: f64) -> DVector<f64> {
    let y = spec.response();
    DVector::from_fn(y.len(), |n, _| weight(y[n], mu_ref[n], delta))
}

/// Weight for one observation.
pub fn weight(y: f64, mu: f64, delta: f64) -> f64 {
    let lower = cdf_raw(y, mu);
    // 1 - F computed directly to keep precision in the upper tail.
    let upper = (-std::f64::consts::FRAC_PI_4 * (y / mu).powi(2)).exp();
    if lower < delta {
        (lower / delta).clamp(0.0, 1.0)
    } else if upper < delta {
        (upper / delta).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Starting point: least squares of `g(y)` on `X`, falling back to an
/// intercept-style start when that point is infeasible.
pub fn initial_beta(spec: &ModelSpec) -> Result<DVector<f64>> {
    let link = spec.link();
    let gy = spec.response().map(|y| link.link(y));
    let x = spec.x();
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&gy, 1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    if spec.predict_mean(&beta).is_ok() {
        return Ok(beta);
    }
    // Identity link: a constant mean equal to the sample mean, if the design
    // can represent it.
    let ybar = spec.response().mean();
    let target = DVector::from_element(spec.n_obs(), link.link(ybar));
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    if spec.predict_mean(&beta).is_ok() {
        Ok(beta)
    } else {
        Err(Error::Infeasible("no starting coefficients give positive means".into()))
    }
}

/// Maximizes the weighted log-likelihood from `start` with fixed weights.
pub fn maximize_weighted(
    spec: &ModelSpec,
    weights: &DVector<f64>,
    start: DVector<f64>,
    cfg: &RobustConfig,
) -> Result<BfgsOutcome> {
    check_weights(spec, weights)?;
    spec.predict_mean(&start)?;
    let objective = |beta: &DVector<f64>| {
        let mu = spec.predict_mean(beta).ok()?;
        let ll = loglik_at(spec.response(), &mu, weights);
        let grad = score_at(spec, &mu, weights);
        Some((-ll, -grad))
    };
    let mut out = optim::minimize(objective, start, &cfg.bfgs())
        .ok_or_else(|| Error::Infeasible("objective not finite at the starting point".into()))?;
    out.f = -out.f;
    out.grad = -out.grad;
    for v in out.trace.iter_mut() {
        *v = -*v;
    }
    Ok(out)
}

fn finish(
    spec: &ModelSpec,
    weights: DVector<f64>,
    out: BfgsOutcome,
    method: Method,
) -> Result<FitResult> {
    let mu_hat = spec.predict_mean(&out.x)?;
    let fisher = fisher_information(spec, &mu_hat)?;
    let covariance = fisher
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Fisher information is not positive definite".into()))?
        .inverse();
    let std_errors = covariance.diagonal().map(f64::sqrt);
    Ok(FitResult {
        converged: out.converged(),
        grad_norm: out.grad_norm(),
        iterations: out.iterations,
        loglik: out.f,
        beta_hat: out.x,
        coefficient_names: spec.design().column_names().to_vec(),
        weights,
        mu_hat,
        fisher_info: fisher,
        covariance,
        std_errors,
        method,
        link: spec.link(),
    })
}

/// Plain maximum likelihood fit.
pub fn fit_mle(spec: &ModelSpec, cfg: &RobustConfig) -> Result<FitResult> {
    if cfg.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    spec.design().check_full_rank()?;
    let weights = DVector::from_element(spec.n_obs(), 1.0);
    let start = initial_beta(spec)?;
    let out = maximize_weighted(spec, &weights, start, cfg)?;
    finish(spec, weights, out, Method::Mle)
}

/// Weighted maximum likelihood fit. With `reweight_iterations == 0` this is
/// exactly [`fit_mle`].
pub fn fit_wmle(spec: &ModelSpec, cfg: &RobustConfig) -> Result<FitResult> {
    let mle = fit_mle(spec, cfg)?;
    fit_wmle_from(spec, cfg, mle)
}

/// WMLE rounds starting from an existing MLE fit of the same model.
pub fn fit_wmle_from(spec: &ModelSpec, cfg: &RobustConfig, mle: FitResult) -> Result<FitResult> {
    let mut fit = mle;
    if cfg.reweight_iterations == 0 {
        return Ok(fit);
    }
    cfg.validate()?;
    for _ in 0..cfg.reweight_iterations {
        let weights = compute_weights(spec, &fit.mu_hat, cfg.delta);
        let out = maximize_weighted(spec, &weights, fit.beta_hat.clone(), cfg)?;
        fit = finish(spec, weights, out, Method::Wmle)?;
    }
    Ok(fit)
}

/// Dispatches on `method`; for [`Method::Wmle`] at least one reweighting
/// round is performed.
pub fn fit(spec: &ModelSpec, cfg: &RobustConfig, method: Method) -> Result<FitResult> {
    match method {
        Method::Mle => fit_mle(spec, cfg),
        Method::Wmle => {
            let cfg = RobustConfig { reweight_iterations: cfg.reweight_iterations.max(1), ..*cfg };
            fit_wmle(spec, &cfg)
        }
    }
}
