//! Mean-parameterized Rayleigh distribution.
//!
//! With mean `mu`, the density is `pi y / (2 mu^2) * exp(-pi y^2 / (4 mu^2))`,
//! so the conventional scale parameter is `sigma = mu * sqrt(2 / pi)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;

use crate::error::{Error, Result};

/// Rayleigh distribution parameterized by its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighMean {
    mu: f64,
}

impl RayleighMean {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu > 0.0 {
            Ok(Self { mu })
        } else {
            Err(Error::Domain(format!("Rayleigh mean must be positive and finite, got {mu}")))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu * self.mu * (4.0 / PI - 1.0)
    }

    /// Density; zero at `y = 0` and for negative `y`.
    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let mu2 = self.mu * self.mu;
        FRAC_PI_2 * y / mu2 * (-FRAC_PI_4 * y * y / mu2).exp()
    }

    /// Log-density, defined for `y > 0` only.
    pub fn log_pdf(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("log-density requires y > 0, got {y}")));
        }
        Ok(log_density(y, self.mu))
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        -(-FRAC_PI_4 * (y / self.mu).powi(2)).exp_m1()
    }

    /// Upper tail `1 - F(y)`, accurate where `F` rounds to one.
    pub fn sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        (-FRAC_PI_4 * (y / self.mu).powi(2)).exp()
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {u}")));
        }
        Ok(self.quantile_unchecked(u))
    }

    /// Inverse of the upper tail: the `y` with `1 - F(y) = p`, for `p` in `(0, 1]`.
    pub fn quantile_upper(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("upper-tail probability must lie in (0, 1], got {p}")));
        }
        Ok(2.0 * self.mu * (-p.ln() / PI).sqrt())
    }

    #[inline]
    fn quantile_unchecked(&self, u: f64) -> f64 {
        2.0 * self.mu * (-(-u).ln_1p() / PI).sqrt()
    }

    /// Draws one variate by inversion of a uniform `[0, 1)` draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile_unchecked(u)
    }
}

/// `log f(y; mu)` without argument checks. Callers guarantee `y > 0`, `mu > 0`.
#[inline]
pub(crate) fn log_density(y: f64, mu: f64) -> f64 {
    let ratio = y / mu;
    FRAC_PI_2.ln() + y.ln() - 2.0 * mu.ln() - FRAC_PI_4 * ratio * ratio
}

/// `d log f / d mu`.
#[inline]
pub(crate) fn dlog_density_dmu(y: f64, mu: f64) -> f64 {
    FRAC_PI_2 * y * y / (mu * mu * mu) - 2.0 / mu
}

#[inline]
pub(crate) fn cdf_raw(y: f64, mu: f64) -> f64 {
    -(-FRAC_PI_4 * (y / mu).powi(2)).exp_m1()
}
