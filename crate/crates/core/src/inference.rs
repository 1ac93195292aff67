//! Fisher information, Wald tests and quantile residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::dist::cdf_raw;
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::regression::ModelSpec;

/// Residual CDF values are clamped to `[EPS_F, 1 - EPS_F]`.
pub const EPS_F: f64 = 1e-15;

/// Per-observation Fisher weight `(4 / mu^2) (d mu / d eta)^2`.
///
/// Not to be confused with the robustness weights of the WMLE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherWeight(pub f64);

impl FisherWeight {
    pub fn new(mu: f64, dmu_deta: f64) -> Self {
        FisherWeight(4.0 / (mu * mu) * dmu_deta * dmu_deta)
    }
}

/// `I(beta) = X^T W_F X`. The same matrix serves MLE and WMLE fits.
pub fn fisher_information(spec: &ModelSpec, mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    if mu.len() != spec.n_obs() {
        return Err(Error::Dimension(format!("{} means for {} observations", mu.len(), spec.n_obs())));
    }
    if let Some((i, &m)) = mu.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::NonPositiveMean { index: i, eta: m });
    }
    let link = spec.link();
    let x = spec.x();
    let mut weighted = x.clone();
    for (n, mut row) in weighted.row_iter_mut().enumerate() {
        row *= FisherWeight::new(mu[n], link.dmu_deta(mu[n])).0;
    }
    let info = x.tr_mul(&weighted);
    // Symmetrize against rounding so Cholesky sees an exactly symmetric matrix.
    let info = (&info + info.transpose()) * 0.5;
    if info.clone().cholesky().is_none() {
        return Err(Error::Singular("Fisher information is not positive definite".into()));
    }
    Ok(info)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldReport {
    /// Tested coefficient indices (zero based).
    pub interest: Vec<usize>,
    pub names: Vec<String>,
    pub estimate: Vec<f64>,
    pub null_value: Vec<f64>,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub threshold: f64,
    pub pfa: f64,
    pub reject_null: bool,
}

/// Upper `1 - pfa` quantile of the chi-square distribution with `dof` degrees.
pub fn chi_square_threshold(dof: usize, pfa: f64) -> Result<f64> {
    let chi = chi_square(dof)?;
    Ok(chi.inverse_cdf(1.0 - pfa))
}

/// `P(chi2_dof > t)`.
pub fn chi_square_sf(dof: usize, t: f64) -> Result<f64> {
    Ok(chi_square(dof)?.sf(t.max(0.0)))
}

fn chi_square(dof: usize) -> Result<ChiSquared> {
    ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))
}

/// Wald test from an estimate and its covariance, without a fit object.
pub fn wald_statistic(
    beta: &DVector<f64>,
    covariance: &DMatrix<f64>,
    interest: &[usize],
    null_value: &[f64],
) -> Result<f64> {
    if interest.is_empty() {
        return Err(Error::Domain("Wald test needs at least one coefficient".into()));
    }
    if interest.len() != null_value.len() {
        return Err(Error::Dimension(format!(
            "{} tested coefficients but {} null values",
            interest.len(),
            null_value.len()
        )));
    }
    let k = beta.len();
    if let Some(&bad) = interest.iter().find(|&&i| i >= k) {
        return Err(Error::Dimension(format!("coefficient index {bad} out of range (k = {k})")));
    }
    let mut seen = interest.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != interest.len() {
        return Err(Error::Domain("repeated coefficient index in Wald test".into()));
    }
    let diff = DVector::from_fn(interest.len(), |i, _| beta[interest[i]] - null_value[i]);
    let sub = DMatrix::from_fn(interest.len(), interest.len(), |i, j| covariance[(interest[i], interest[j])]);
    let chol = sub
        .cholesky()
        .ok_or_else(|| Error::Singular("covariance block is not positive definite".into()))?;
    let solved = chol.solve(&diff);
    Ok(diff.dot(&solved).max(0.0))
}

/// Wald test of `beta_I = beta_I0` on a converged fit.
pub fn wald_test(fit: &FitResult, interest: &[usize], null_value: &[f64], pfa: f64) -> Result<WaldReport> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Domain(format!("false-alarm probability must be in (0, 1), got {pfa}")));
    }
    if !fit.converged {
        return Err(Error::NotConverged { iterations: fit.iterations, grad_norm: fit.grad_norm });
    }
    let statistic = wald_statistic(&fit.beta_hat, &fit.covariance, interest, null_value)?;
    let dof = interest.len();
    let threshold = chi_square_threshold(dof, pfa)?;
    let p_value = chi_square_sf(dof, statistic)?;
    Ok(WaldReport {
        interest: interest.to_vec(),
        names: interest.iter().map(|&i| fit.coefficient_names.get(i).cloned().unwrap_or_default()).collect(),
        estimate: interest.iter().map(|&i| fit.beta_hat[i]).collect(),
        null_value: null_value.to_vec(),
        statistic,
        dof,
        p_value,
        threshold,
        pfa,
        reject_null: statistic > threshold,
    })
}

/// One single-coefficient test `beta_i = 0` for every non-intercept coefficient.
pub fn ground_type_detect(fit: &FitResult, pfa: f64) -> Result<Vec<WaldReport>> {
    let k = fit.beta_hat.len();
    if k < 2 {
        log::warn!("intercept-only model: no ground-type coefficients to test");
        return Ok(Vec::new());
    }
    (1..k).map(|i| wald_test(fit, &[i], &[0.0], pfa)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileResiduals {
    pub values: Vec<f64>,
    /// Indices whose CDF value had to be clamped.
    pub clamped: Vec<usize>,
}

/// `Phi^-1(F(y; mu))` for one observation. The boolean reports clamping.
pub fn quantile_residual(y: f64, mu: f64) -> (f64, bool) {
    let normal = standard_normal();
    let lower = if y > 0.0 { cdf_raw(y, mu) } else { 0.0 };
    if lower <= 0.5 {
        let clamped = lower < EPS_F;
        (normal.inverse_cdf(lower.max(EPS_F)), clamped)
    } else {
        let upper = (-std::f64::consts::FRAC_PI_4 * (y / mu).powi(2)).exp();
        let clamped = upper < EPS_F;
        (-normal.inverse_cdf(upper.max(EPS_F)), clamped)
    }
}

/// Quantile residuals of a fitted model on its own observations.
pub fn quantile_residuals(spec: &ModelSpec, fit: &FitResult) -> Result<QuantileResiduals> {
    let mu = spec.predict_mean(&fit.beta_hat)?;
    let mut values = Vec::with_capacity(mu.len());
    let mut clamped = Vec::new();
    for (n, (&y, &m)) in spec.response().iter().zip(mu.iter()).enumerate() {
        let (r, c) = quantile_residual(y, m);
        if c {
            clamped.push(n);
        }
        values.push(r);
    }
    Ok(QuantileResiduals { values, clamped })
}

pub(crate) fn standard_normal() -> Normal {
    Normal::standard()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RayleighMean;
    use crate::regression::{DesignMatrix, LinkFunction};
    use approx::assert_relative_eq;

    #[test]
    fn log_link_fisher_is_four_xtx() {
        let x1: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let d = DesignMatrix::with_intercept(&[x1]).unwrap();
        let spec = ModelSpec::new(d, LinkFunction::Log, vec![1.0; 20]).unwrap();
        let mu = DVector::from_fn(20, |i, _| 0.1 + i as f64);
        let info = fisher_information(&spec, &mu).unwrap();
        let expect = spec.x().tr_mul(spec.x()) * 4.0;
        assert_relative_eq!(info, expect, max_relative = 1e-14);
    }

    #[test]
    fn intercept_only_standard_error() {
        let d = DesignMatrix::from_columns(&[vec![1.0; 100]]).unwrap();
        let spec = ModelSpec::new(d, LinkFunction::Log, vec![1.0; 100]).unwrap();
        let info = fisher_information(&spec, &DVector::from_element(100, 3.0)).unwrap();
        assert_relative_eq!(info[(0, 0)], 400.0);
        assert_relative_eq!((1.0 / info[(0, 0)]).sqrt(), 0.05);
    }

    #[test]
    fn identity_link_fisher() {
        let d = DesignMatrix::from_columns(&[vec![1.0; 2]]).unwrap();
        let spec = ModelSpec::new(d, LinkFunction::Identity, vec![1.0; 2]).unwrap();
        let info = fisher_information(&spec, &DVector::from_element(2, 2.0)).unwrap();
        // Two identical observations, each contributing (4 / 2^2) * 1.
        assert_relative_eq!(info[(0, 0)], 2.0);
    }

    #[test]
    fn chi_square_quantile() {
        assert!((chi_square_threshold(1, 0.05).unwrap() - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi_square_threshold(2, 0.05).unwrap() - 5.991_464_547_107_979).abs() < 1e-9);
    }

    #[test]
    fn table_style_p_value() {
        let beta = DVector::from_vec(vec![0.1168]);
        let cov = DMatrix::from_element(1, 1, 0.0521 * 0.0521);
        let t = wald_statistic(&beta, &cov, &[0], &[0.0]).unwrap();
        let p = chi_square_sf(1, t).unwrap();
        assert!((p - 0.025).abs() < 0.002, "p = {p}");
    }

    #[test]
    fn zero_difference_gives_zero_statistic() {
        let beta = DVector::from_vec(vec![0.4, -0.2]);
        let cov = DMatrix::from_row_slice(2, 2, &[0.1, 0.01, 0.01, 0.2]);
        assert_eq!(wald_statistic(&beta, &cov, &[0, 1], &[0.4, -0.2]).unwrap(), 0.0);
        assert!(wald_statistic(&beta, &cov, &[], &[]).is_err());
        assert!(wald_statistic(&beta, &cov, &[2], &[0.0]).is_err());
        assert!(wald_statistic(&beta, &cov, &[0, 0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_at_median_is_zero() {
        let mu: f64 = 1.9;
        let y = 2.0 * mu * (std::f64::consts::LN_2 / std::f64::consts::PI).sqrt();
        let (r, c) = quantile_residual(y, mu);
        assert!(r.abs() < 1e-12 && !c);
    }

    #[test]
    fn residual_three_sigma() {
        let d = RayleighMean::new(1.0).unwrap();
        let y = d.quantile(0.99865).unwrap();
        let (r, _) = quantile_residual(y, 1.0);
        // Phi^-1(0.99865) = 3.000 (to four digits)
        assert!((r - 3.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn residual_clamped_at_extremes() {
        let (r, c) = quantile_residual(100.0, 1.0);
        assert!(c && r.is_finite() && r > 7.9);
        let (r, c) = quantile_residual(1e-12, 1.0);
        assert!(c && r.is_finite() && r < -7.9);
        let (r, c) = quantile_residual(0.0, 1.0);
        assert!(c && r < -7.9);
    }
}
