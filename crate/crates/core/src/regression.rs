//! Model specification: link functions, design matrices and the linear
//! predictor `eta = X beta`, `mu = g^-1(eta)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link between the mean and the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    #[default]
    Log,
    Identity,
}

impl LinkFunction {
    /// `g(mu)`.
    pub fn link(self, mu: f64) -> f64 {
        match self {
            LinkFunction::Log => mu.ln(),
            LinkFunction::Identity => mu,
        }
    }

    /// `g^-1(eta)`.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            LinkFunction::Log => eta.exp(),
            LinkFunction::Identity => eta,
        }
    }

    /// `g'(mu)`.
    pub fn derivative(self, mu: f64) -> f64 {
        match self {
            LinkFunction::Log => 1.0 / mu,
            LinkFunction::Identity => 1.0,
        }
    }

    /// `d mu / d eta = 1 / g'(mu)`.
    pub fn dmu_deta(self, mu: f64) -> f64 {
        match self {
            LinkFunction::Log => mu,
            LinkFunction::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Log => "log",
            LinkFunction::Identity => "identity",
        }
    }
}

impl std::str::FromStr for LinkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(LinkFunction::Log),
            "identity" | "id" => Ok(LinkFunction::Identity),
            other => Err(Error::Config(format!("unknown link function '{other}'"))),
        }
    }
}

/// N x k covariate matrix; row `n` is `x[n]^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, k) = x.shape();
        if column_names.len() != k {
            return Err(Error::Dimension(format!(
                "{} column names for {k} columns",
                column_names.len()
            )));
        }
        if k == 0 {
            return Err(Error::DegenerateDesign("design has no columns".into()));
        }
        if k >= n {
            return Err(Error::DegenerateDesign(format!(
                "need more observations than covariates (N = {n}, k = {k})"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design matrix contains non-finite entries".into()));
        }
        Ok(Self { x, column_names })
    }

    /// Builds a design from columns, with default names `x1..xk`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Dimension("design columns differ in length".into()));
        }
        let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
        let names = (1..=k).map(|j| format!("x{j}")).collect();
        Self::new(x, names)
    }

    /// An intercept column followed by the given covariates.
    pub fn with_intercept(covariates: &[Vec<f64>]) -> Result<Self> {
        let n = covariates.first().map_or(0, Vec::len);
        let mut cols = Vec::with_capacity(covariates.len() + 1);
        cols.push(vec![1.0; n]);
        cols.extend(covariates.iter().cloned());
        let mut design = Self::from_columns(&cols)?;
        design.column_names[0] = "(Intercept)".into();
        Ok(design)
    }

    /// Replaces the column names.
    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.x.ncols() {
            return Err(Error::Dimension(format!("{} column names for {} columns", names.len(), self.x.ncols())));
        }
        self.column_names = names;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Numerical rank with tolerance `1e-10 * largest singular value`.
    pub fn rank(&self) -> usize {
        let sv = self.x.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0_f64, f64::max);
        if max == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > 1e-10 * max).count()
    }

    pub fn check_full_rank(&self) -> Result<()> {
        let rank = self.rank();
        if rank < self.ncols() {
            Err(Error::RankDeficient { rank, cols: self.ncols() })
        } else {
            Ok(())
        }
    }

    /// Selects a subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows);
        Self::new(x, self.column_names.clone())
    }
}

/// Treatment (dummy) coding: an intercept plus one indicator per
/// non-reference level, in order of first appearance.
pub fn dummy_design<S: AsRef<str>>(labels: &[S], reference: &str) -> Result<DesignMatrix> {
    let mut levels: Vec<&str> = Vec::new();
    for l in labels {
        let l = l.as_ref();
        if !levels.contains(&l) {
            levels.push(l);
        }
    }
    if !levels.contains(&reference) {
        return Err(Error::DegenerateDesign(format!(
            "reference level '{reference}' does not occur in the labels"
        )));
    }
    if levels.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "dummy coding needs at least two categories, found {}",
            levels.len()
        )));
    }
    let others: Vec<&str> = levels.into_iter().filter(|&l| l != reference).collect();
    let n = labels.len();
    let k = others.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0
        } else if labels[i].as_ref() == others[j - 1] {
            1.0
        } else {
            0.0
        }
    });
    let mut names = vec!["(Intercept)".to_string()];
    names.extend(others.iter().map(|s| s.to_string()));
    DesignMatrix::new(x, names)
}

/// A design, a link and a strictly positive response.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    design: DesignMatrix,
    link: LinkFunction,
    response: DVector<f64>,
}

impl ModelSpec {
    pub fn new(design: DesignMatrix, link: LinkFunction, response: Vec<f64>) -> Result<Self> {
        if response.len() != design.nrows() {
            return Err(Error::Dimension(format!(
                "response has {} values but the design has {} rows",
                response.len(),
                design.nrows()
            )));
        }
        let bad: Vec<usize> = response
            .iter()
            .enumerate()
            .filter(|(_, &y)| !(y > 0.0 && y.is_finite()))
            .map(|(i, _)| i)
            .collect();
        if let Some(&first) = bad.first() {
            return Err(Error::NonPositiveResponse { count: bad.len(), first });
        }
        Ok(Self { design, link, response: DVector::from_vec(response) })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.matrix()
    }

    pub fn link(&self) -> LinkFunction {
        self.link
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }

    /// Same design and link with a different response vector.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        Self::new(self.design.clone(), self.link, response)
    }

    pub fn linear_predictor(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.n_coef() {
            return Err(Error::Dimension(format!(
                "beta has {} entries, design has {} columns",
                beta.len(),
                self.n_coef()
            )));
        }
        Ok(self.x() * beta)
    }

    /// `mu[n] = g^-1(x[n]^T beta)`; fails if any mean is not positive.
    pub fn predict_mean(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        let eta = self.linear_predictor(beta)?;
        let mut mu = eta.clone();
        for (i, m) in mu.iter_mut().enumerate() {
            let v = self.link.inverse(*m);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveMean { index: i, eta: eta[i] });
            }
            *m = v;
        }
        Ok(mu)
    }
}
