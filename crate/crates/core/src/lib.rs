//! Rayleigh regression with robust (weighted maximum likelihood) and
//! classical estimation, Wald inference, Monte Carlo evaluation and a
//! residual control-chart anomaly detector for amplitude images.

pub mod detection;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod io;
pub mod optim;
pub mod regression;
pub mod rng;
pub mod simulation;

pub use dist::RayleighMean;
pub use error::{Error, Result};
pub use estimation::{fit_mle, fit_wmle, FitResult, Method, RobustConfig};
pub use regression::{dummy_design, DesignMatrix, LinkFunction, ModelSpec};
