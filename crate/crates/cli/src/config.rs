//! Flat JSON run configuration shared by every command.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rayreg::detection::{DetectorConfig, Tail};
use rayreg::simulation::ScenarioConfig;
use rayreg::{LinkFunction, RobustConfig};
use serde::{Deserialize, Serialize};

/// A scalar or a list; lists define a grid for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Every key is optional. Commands fill the keys they use from their own
/// defaults, and the resolved configuration is stored in the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkFunction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reweight_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_true: Option<Vec<f64>>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<OneOrMany<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<OneOrMany<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opening_se: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation_se: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_distance_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel_size_m: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config error at `{path}`: {}", e.into_inner())
    })
}

pub fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            parse_config(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

impl Config {
    pub fn robust(&mut self) -> RobustConfig {
        let d = RobustConfig::default();
        RobustConfig {
            delta: *self.delta.get_or_insert(d.delta),
            reweight_iterations: *self.reweight_iterations.get_or_insert(d.reweight_iterations),
            max_iter: *self.max_iter.get_or_insert(d.max_iter),
            grad_tol: *self.grad_tol.get_or_insert(d.grad_tol),
            ll_rel_tol: d.ll_rel_tol,
        }
    }

    pub fn link(&mut self) -> LinkFunction {
        *self.link.get_or_insert(LinkFunction::Log)
    }

    pub fn detector(&mut self, tail: Tail) -> DetectorConfig {
        let d = DetectorConfig::default();
        DetectorConfig {
            control_limit: *self.control_limit.get_or_insert(d.control_limit),
            opening_se: *self.opening_se.get_or_insert(d.opening_se),
            dilation_se: *self.dilation_se.get_or_insert(d.dilation_se),
            merge_distance_m: *self.merge_distance_m.get_or_insert(d.merge_distance_m),
            pixel_size_m: *self.pixel_size_m.get_or_insert(d.pixel_size_m),
            tail,
        }
    }

    /// Scenario settings shared by every grid cell; `n` and `epsilon` are
    /// taken from the first entries and overridden per cell.
    pub fn scenario(&mut self, default_n: usize, default_eps: f64) -> ScenarioConfig {
        let d = ScenarioConfig::default();
        let robust = self.robust();
        let link = self.link();
        let n = self.n.get_or_insert(OneOrMany::One(default_n)).to_vec();
        let eps = self.epsilon.get_or_insert(OneOrMany::One(default_eps)).to_vec();
        ScenarioConfig {
            beta_true: self.beta_true.get_or_insert(d.beta_true).clone(),
            n: n.first().copied().unwrap_or(default_n),
            epsilon: eps.first().copied().unwrap_or(default_eps),
            outlier_value: *self.outlier_value.get_or_insert(d.outlier_value),
            replications: *self.replications.get_or_insert(d.replications),
            master_seed: *self.seed.get_or_insert(d.master_seed),
            link,
            robust,
        }
    }

    pub fn single_n(&self) -> Result<usize> {
        match self.n.as_ref().map(OneOrMany::to_vec).as_deref() {
            Some([n]) => Ok(*n),
            Some(v) => bail!("this command needs a single N, got {v:?}"),
            None => bail!("N is not set"),
        }
    }

    pub fn single_epsilon(&self) -> Result<f64> {
        match self.epsilon.as_ref().map(OneOrMany::to_vec).as_deref() {
            Some([e]) => Ok(*e),
            Some(v) => bail!("this command needs a single epsilon, got {v:?}"),
            None => bail!("epsilon is not set"),
        }
    }
}
