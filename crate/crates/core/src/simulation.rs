//! Monte Carlo evaluation of the MLE and WMLE: contaminated signal
//! generation, bias/MSE tables, breakdown curves and sensitivity curves.
//!
//! Covariates are drawn once per scenario from U(0, 1) and held fixed over
//! replications. Replication `r` draws its signal from the stream
//! `derive_seed(master_seed, r)`, so replications can run in any order or in
//! parallel and still reproduce bit-for-bit. Both estimators always see the
//! same signal.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::RayleighMean;
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, fit_wmle_from, FitResult, Method, RobustConfig};
use crate::regression::{DesignMatrix, LinkFunction, ModelSpec};
use crate::rng;

/// Stream index reserved for the fixed covariates.
const COVARIATE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub beta_true: Vec<f64>,
    pub n: usize,
    pub epsilon: f64,
    pub outlier_value: f64,
    pub replications: usize,
    pub master_seed: u64,
    pub link: LinkFunction,
    pub robust: RobustConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            beta_true: vec![0.5, 0.15],
            n: 500,
            epsilon: 0.0,
            outlier_value: 10.0,
            replications: 1000,
            master_seed: 2021,
            link: LinkFunction::Log,
            robust: RobustConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta_true.is_empty() {
            return Err(Error::Config("beta_true must not be empty".into()));
        }
        if self.n <= self.beta_true.len() {
            return Err(Error::Config(format!(
                "signal length {} must exceed the number of coefficients {}",
                self.n,
                self.beta_true.len()
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if !(self.outlier_value > 0.0 && self.outlier_value.is_finite()) {
            return Err(Error::Config("outlier_value must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        self.robust.validate()
    }

    /// Number of outliers per replication, `floor(epsilon * N)`.
    pub fn outlier_count(&self) -> usize {
        (self.epsilon * self.n as f64).floor() as usize
    }
}

/// Design and true means shared by all replications of a scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub design: DesignMatrix,
    pub mu: DVector<f64>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let k = config.beta_true.len();
        let mut cov_rng = rng::stream(config.master_seed, COVARIATE_STREAM);
        let covariates: Vec<Vec<f64>> =
            (1..k).map(|_| (0..config.n).map(|_| cov_rng.random::<f64>()).collect()).collect();
        let design = DesignMatrix::with_intercept(&covariates)?;
        let spec = ModelSpec::new(design.clone(), config.link, vec![1.0; config.n])?;
        let mu = spec.predict_mean(&DVector::from_vec(config.beta_true.clone()))?;
        Ok(Self { config, design, mu })
    }

    /// Clean signal plus a random ordering of positions; the first `m`
    /// entries of the ordering are the outlier positions when `m` outliers
    /// are injected, so contamination sets are nested across `m`.
    pub fn draw(&self, replication: u64) -> (Vec<f64>, Vec<usize>) {
        let mut r = rng::stream(self.config.master_seed, replication);
        let y = self
            .mu
            .iter()
            .map(|&m| RayleighMean::new(m).expect("positive mean").sample(&mut r))
            .collect();
        let mut order: Vec<usize> = (0..self.config.n).collect();
        order.shuffle(&mut r);
        (y, order)
    }

    /// Signal of replication `replication` with `count` outliers.
    pub fn signal_with(&self, replication: u64, count: usize, value: f64) -> (Vec<f64>, Vec<usize>) {
        let (mut y, order) = self.draw(replication);
        let mut positions = order[..count.min(order.len())].to_vec();
        for &p in &positions {
            y[p] = value;
        }
        positions.sort_unstable();
        (y, positions)
    }

    pub fn spec_for(&self, y: Vec<f64>) -> Result<ModelSpec> {
        ModelSpec::new(self.design.clone(), self.config.link, y)
    }
}

/// Signal for one replication and its (sorted) outlier positions.
pub fn simulate_signal(cfg: &ScenarioConfig, replication: u64) -> Result<(Vec<f64>, Vec<usize>)> {
    let scenario = Scenario::new(cfg.clone())?;
    Ok(scenario.signal_with(replication, cfg.outlier_count(), cfg.outlier_value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub estimator: Method,
    pub n: usize,
    pub epsilon: f64,
    pub replications: usize,
    /// Replications excluded because the fit failed or did not converge.
    pub convergence_failures: usize,
    pub beta_true: Vec<f64>,
    pub mean: Vec<f64>,
    pub rb_percent: Vec<f64>,
    pub mse: Vec<f64>,
    pub absolute_total_rb: f64,
    pub absolute_total_mse: f64,
}

impl MonteCarloReport {
    /// Aggregates estimates; `None` entries count as convergence failures.
    pub fn from_estimates(
        estimator: Method,
        cfg: &ScenarioConfig,
        estimates: &[Option<DVector<f64>>],
    ) -> Self {
        let k = cfg.beta_true.len();
        let ok: Vec<&DVector<f64>> = estimates.iter().flatten().collect();
        let used = ok.len() as f64;
        let mut mean = vec![f64::NAN; k];
        let mut mse = vec![f64::NAN; k];
        if !ok.is_empty() {
            for i in 0..k {
                mean[i] = ok.iter().map(|b| b[i]).sum::<f64>() / used;
                mse[i] = ok.iter().map(|b| (b[i] - cfg.beta_true[i]).powi(2)).sum::<f64>() / used;
            }
        }
        let rb_percent: Vec<f64> =
            (0..k).map(|i| 100.0 * (mean[i] - cfg.beta_true[i]) / cfg.beta_true[i]).collect();
        Self {
            estimator,
            n: cfg.n,
            epsilon: cfg.epsilon,
            replications: estimates.len(),
            convergence_failures: estimates.len() - ok.len(),
            beta_true: cfg.beta_true.clone(),
            absolute_total_rb: rb_percent.iter().map(|v| v.abs()).sum(),
            absolute_total_mse: mse.iter().sum(),
            mean,
            rb_percent,
            mse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub epsilon: f64,
    pub outliers: usize,
    pub wmle: MonteCarloReport,
    pub mle: MonteCarloReport,
}

fn converged_beta(fit: Result<FitResult>) -> Option<DVector<f64>> {
    fit.ok().filter(|f| f.converged).map(|f| f.beta_hat)
}

/// Fits both estimators to one signal. The WMLE reuses the MLE fit as its
/// starting point.
fn fit_pair(spec: &ModelSpec, robust: &RobustConfig) -> (Option<DVector<f64>>, Option<DVector<f64>>) {
    let Ok(mle) = fit_mle(spec, robust) else {
        return (None, None);
    };
    let wmle = converged_beta(fit_wmle_from(spec, robust, mle.clone()));
    (converged_beta(Ok(mle)), wmle)
}

/// Per-replication MLE and WMLE estimates with `count` outliers of `value`.
fn replicate(scenario: &Scenario, count: usize, value: f64) -> Vec<(Option<DVector<f64>>, Option<DVector<f64>>)> {
    (0..scenario.config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let (y, _) = scenario.signal_with(r, count, value);
            match scenario.spec_for(y) {
                Ok(spec) => fit_pair(&spec, &scenario.config.robust),
                Err(_) => (None, None),
            }
        })
        .collect()
}

/// One cell of the bias/MSE table.
pub fn run_cell(cfg: &ScenarioConfig) -> Result<CellReport> {
    let scenario = Scenario::new(cfg.clone())?;
    let count = cfg.outlier_count();
    let fits = replicate(&scenario, count, cfg.outlier_value);
    let (mle, wmle): (Vec<_>, Vec<_>) = fits.into_iter().unzip();
    Ok(CellReport {
        n: cfg.n,
        epsilon: cfg.epsilon,
        outliers: count,
        wmle: MonteCarloReport::from_estimates(Method::Wmle, cfg, &wmle),
        mle: MonteCarloReport::from_estimates(Method::Mle, cfg, &mle),
    })
}

/// Runs every cell of a grid.
pub fn run_table(grid: &[ScenarioConfig]) -> Result<Vec<CellReport>> {
    if grid.is_empty() {
        return Err(Error::Config("empty scenario grid".into()));
    }
    grid.iter().map(run_cell).collect()
}

/// The grid of sample sizes and contamination levels with shared settings.
pub fn table_grid(base: &ScenarioConfig, sizes: &[usize], epsilons: &[f64]) -> Vec<ScenarioConfig> {
    sizes
        .iter()
        .flat_map(|&n| epsilons.iter().map(move |&e| ScenarioConfig { n, epsilon: e, ..base.clone() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownPoint {
    pub outliers: usize,
    pub fraction: f64,
    pub mle_total_rb: f64,
    pub wmle_total_rb: f64,
    pub mle_failures: usize,
    pub wmle_failures: usize,
}

/// Total relative bias `sum_i |RB%_i|` of both estimators against the
/// number of injected outliers.
pub fn breakdown_curve(cfg: &ScenarioConfig, outlier_counts: &[usize]) -> Result<Vec<BreakdownPoint>> {
    let scenario = Scenario::new(cfg.clone())?;
    if let Some(&bad) = outlier_counts.iter().find(|&&c| c >= cfg.n) {
        return Err(Error::Config(format!("outlier count {bad} must be below N = {}", cfg.n)));
    }
    Ok(outlier_counts
        .iter()
        .map(|&count| {
            let fits = replicate(&scenario, count, cfg.outlier_value);
            let (mle, wmle): (Vec<_>, Vec<_>) = fits.into_iter().unzip();
            let m = MonteCarloReport::from_estimates(Method::Mle, cfg, &mle);
            let w = MonteCarloReport::from_estimates(Method::Wmle, cfg, &wmle);
            BreakdownPoint {
                outliers: count,
                fraction: count as f64 / cfg.n as f64,
                mle_total_rb: m.absolute_total_rb,
                wmle_total_rb: w.absolute_total_rb,
                mle_failures: m.convergence_failures,
                wmle_failures: w.convergence_failures,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub outlier_value: f64,
    pub mle_masc: f64,
    pub wmle_masc: f64,
    pub mle_failures: usize,
    pub wmle_failures: usize,
}

/// Mean absolute sensitivity curve (MASC).
///
/// For each replication the clean signal and a copy with `floor(epsilon N)`
/// positions set to the outlier value are both fitted;
/// `SC = N (beta_contaminated - beta_clean)` and the replication's value is
/// the mean of `|SC|` over coefficients. MASC averages that over
/// replications where all fits converged.
pub fn sensitivity_curve(cfg: &ScenarioConfig, outlier_values: &[f64]) -> Result<Vec<SensitivityPoint>> {
    let scenario = Scenario::new(cfg.clone())?;
    if let Some(&bad) = outlier_values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Config(format!("outlier values must be positive, got {bad}")));
    }
    let count = cfg.outlier_count();
    let n = cfg.n as f64;
    let robust = cfg.robust;
    // Clean fits do not depend on the outlier value.
    let clean: Vec<(Option<DVector<f64>>, Option<DVector<f64>>)> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let (y, _) = scenario.signal_with(r, 0, cfg.outlier_value);
            scenario.spec_for(y).map(|s| fit_pair(&s, &robust)).unwrap_or((None, None))
        })
        .collect();

    let masc = |pairs: Vec<(Option<DVector<f64>>, Option<DVector<f64>>)>| -> (f64, usize) {
        let vals: Vec<f64> = pairs
            .into_iter()
            .filter_map(|(c, b)| {
                let (c, b) = (c?, b?);
                Some((&c - &b).iter().map(|d| (n * d).abs()).sum::<f64>() / c.len() as f64)
            })
            .collect();
        let failures = cfg.replications - vals.len();
        (vals.iter().sum::<f64>() / vals.len() as f64, failures)
    };

    Ok(outlier_values
        .iter()
        .map(|&value| {
            let fits = replicate(&scenario, count, value);
            let mle_pairs = fits.iter().zip(&clean).map(|(f, c)| (f.0.clone(), c.0.clone())).collect();
            let wmle_pairs = fits.iter().zip(&clean).map(|(f, c)| (f.1.clone(), c.1.clone())).collect();
            let (mle_masc, mle_failures) = masc(mle_pairs);
            let (wmle_masc, wmle_failures) = masc(wmle_pairs);
            SensitivityPoint { outlier_value: value, mle_masc, wmle_masc, mle_failures, wmle_failures }
        })
        .collect())
}
