//! Residual control-chart anomaly detection on amplitude images.
//!
//! A Rayleigh regression is fitted on a training rectangle of the interest
//! image, with co-registered reference images as covariates. Quantile
//! residuals of every pixel are then thresholded at the control limit, the
//! binary map is cleaned by an opening followed by a dilation, and the
//! surviving 8-connected components are merged when their centroids are
//! closer than the merge distance.

pub mod components;
pub mod morphology;
pub mod scene;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit_wmle, FitResult, RobustConfig};
use crate::inference::quantile_residual;
use crate::regression::{DesignMatrix, LinkFunction, ModelSpec};

pub use components::{connected_components, merge_clusters, score, Cluster, Score};
pub use morphology::{close, dilate, erode, open};

/// Row-major real image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl ImageMatrix {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("image must have at least one row and column".into()));
        }
        if rows * cols != pixels.len() {
            return Err(Error::Dimension(format!(
                "{rows} x {cols} image needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite pixel at ({}, {})", i / cols, i % cols)));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::new(rows, cols, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows, self.cols);
        Self { rows: c, cols: r, pixels: (0..r * c).map(|i| self.get(i % r, i / r)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if rows * cols != bits.len() {
            return Err(Error::Dimension(format!("{rows} x {cols} mask given {} bits", bits.len())));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.cols + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, bits: self.bits.iter().map(|b| !b).collect() }
    }
}

/// Which residual tail counts as anomalous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// `|r| > L`.
    #[default]
    Both,
    /// `r > L` only.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub control_limit: f64,
    pub opening_se: usize,
    pub dilation_se: usize,
    /// Clusters closer than this (meters) are merged.
    pub merge_distance_m: f64,
    pub pixel_size_m: f64,
    pub tail: Tail,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            control_limit: 3.0,
            opening_se: 3,
            dilation_se: 7,
            merge_distance_m: 10.0,
            pixel_size_m: 1.0,
            tail: Tail::Both,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_limit > 0.0) {
            return Err(Error::Config("control limit must be positive".into()));
        }
        for (name, se) in [("opening_se", self.opening_se), ("dilation_se", self.dilation_se)] {
            if se == 0 || se % 2 == 0 {
                return Err(Error::Config(format!("{name} must be odd and at least 1, got {se}")));
            }
        }
        if !(self.merge_distance_m >= 0.0) || !(self.pixel_size_m > 0.0) {
            return Err(Error::Config("merge distance must be nonnegative and pixel size positive".into()));
        }
        Ok(())
    }
}

/// Axis-aligned training rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.rows).contains(&row) && (self.col..self.col + self.cols).contains(&col)
    }

    fn fits(&self, rows: usize, cols: usize) -> bool {
        self.rows > 0 && self.cols > 0 && self.row + self.rows <= rows && self.col + self.cols <= cols
    }
}

/// Marks `|r| > L` (or `r > L` for [`Tail::Upper`]). `|r| = L` is in control.
pub fn threshold_residuals(residuals: &ImageMatrix, limit: f64, tail: Tail) -> BinaryMask {
    let bits = residuals
        .pixels()
        .iter()
        .map(|&r| match tail {
            Tail::Both => r.abs() > limit,
            Tail::Upper => r > limit,
        })
        .collect();
    BinaryMask { rows: residuals.rows(), cols: residuals.cols(), bits }
}

/// Opening with `opening_se`, then dilation with `dilation_se`.
pub fn postprocess(mask: &BinaryMask, cfg: &DetectorConfig) -> BinaryMask {
    dilate(&open(mask, cfg.opening_se), cfg.dilation_se)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub fit: FitResult,
    pub residuals: ImageMatrix,
    /// Pixels outside the control limits, before morphology.
    pub raw_mask: BinaryMask,
    pub mask: BinaryMask,
    pub clusters: Vec<Cluster>,
    pub score: Option<Score>,
}

impl DetectionResult {
    /// Scores clusters against target positions, matching within the merge distance.
    pub fn score_against(&mut self, truth: &[(f64, f64)], cfg: &DetectorConfig) -> Score {
        let s = score(&self.clusters, truth, cfg.merge_distance_m, cfg.pixel_size_m);
        self.score = Some(s);
        s
    }
}

fn check_inputs(interest: &ImageMatrix, covariates: &[ImageMatrix], region: &Rect) -> Result<()> {
    if let Some((i, c)) = covariates.iter().enumerate().find(|(_, c)| c.shape() != interest.shape()) {
        return Err(Error::Dimension(format!(
            "covariate image {i} is {}x{}, interest image is {}x{}",
            c.rows(),
            c.cols(),
            interest.rows(),
            interest.cols()
        )));
    }
    if !region.fits(interest.rows(), interest.cols()) {
        return Err(Error::Dimension(format!(
            "training region {region:?} is not inside the {}x{} image",
            interest.rows(),
            interest.cols()
        )));
    }
    Ok(())
}

fn covariate_row(covariates: &[ImageMatrix], p: usize) -> impl Iterator<Item = f64> + '_ {
    std::iter::once(1.0).chain(covariates.iter().map(move |c| c.pixels[p]))
}

/// Fits the regression on the training rectangle.
pub fn fit_training(
    interest: &ImageMatrix,
    covariates: &[ImageMatrix],
    region: &Rect,
    link: LinkFunction,
    robust: &RobustConfig,
) -> Result<FitResult> {
    check_inputs(interest, covariates, region)?;
    let k = covariates.len() + 1;
    if region.area() < 10 * k {
        return Err(Error::DegenerateDesign(format!(
            "training region has {} pixels, need at least {} for {k} coefficients",
            region.area(),
            10 * k
        )));
    }
    let cols = interest.cols();
    let idx: Vec<usize> = (region.row..region.row + region.rows)
        .flat_map(|r| (region.col..region.col + region.cols).map(move |c| r * cols + c))
        .collect();
    let bad: Vec<(usize, usize)> =
        idx.iter().filter(|&&p| !(interest.pixels[p] > 0.0)).map(|&p| (p / cols, p % cols)).collect();
    if !bad.is_empty() {
        return Err(Error::NonPositivePixels(bad));
    }
    let x = DMatrix::from_row_iterator(idx.len(), k, idx.iter().flat_map(|&p| covariate_row(covariates, p)));
    let mut names = vec!["(Intercept)".to_string()];
    names.extend((1..k).map(|j| format!("x{}", j + 1)));
    let design = DesignMatrix::new(x, names)?;
    let y = idx.iter().map(|&p| interest.pixels[p]).collect();
    let spec = ModelSpec::new(design, link, y)?;
    fit_wmle(&spec, robust)
}

/// Quantile residual field of the whole image under fitted coefficients.
pub fn residual_field(
    interest: &ImageMatrix,
    covariates: &[ImageMatrix],
    beta: &DVector<f64>,
    link: LinkFunction,
) -> Result<ImageMatrix> {
    let (rows, cols) = interest.shape();
    let values: Vec<Result<f64>> = (0..rows * cols)
        .into_par_iter()
        .map(|p| {
            let eta: f64 = covariate_row(covariates, p).zip(beta.iter()).map(|(x, b)| x * b).sum();
            let mu = link.inverse(eta);
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::NonPositiveMean { index: p, eta });
            }
            Ok(quantile_residual(interest.pixels[p], mu).0)
        })
        .collect();
    ImageMatrix::new(rows, cols, values.into_iter().collect::<Result<_>>()?)
}

/// Runs the full detector. `robust.reweight_iterations == 0` uses the
/// plain MLE instead of the WMLE.
pub fn detect(
    interest: &ImageMatrix,
    covariates: &[ImageMatrix],
    region: &Rect,
    cfg: &DetectorConfig,
    robust: &RobustConfig,
) -> Result<DetectionResult> {
    detect_with_link(interest, covariates, region, cfg, robust, LinkFunction::Log)
}

pub fn detect_with_link(
    interest: &ImageMatrix,
    covariates: &[ImageMatrix],
    region: &Rect,
    cfg: &DetectorConfig,
    robust: &RobustConfig,
    link: LinkFunction,
) -> Result<DetectionResult> {
    cfg.validate()?;
    let fit = fit_training(interest, covariates, region, link, robust)?;
    if !fit.converged {
        log::warn!("training fit did not converge (|score|_inf = {:e})", fit.grad_norm);
    }
    let residuals = residual_field(interest, covariates, &fit.beta_hat, link)?;
    let raw_mask = threshold_residuals(&residuals, cfg.control_limit, cfg.tail);
    let mask = postprocess(&raw_mask, cfg);
    let clusters = merge_clusters(&connected_components(&mask), cfg.merge_distance_m / cfg.pixel_size_m);
    Ok(DetectionResult { fit, residuals, raw_mask, mask, clusters, score: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_boundary_is_in_control() {
        let r = ImageMatrix::new(1, 5, vec![0.0, 3.0, -3.0, 3.0001, -3.5]).unwrap();
        let m = threshold_residuals(&r, 3.0, Tail::Both);
        assert_eq!(m.bits(), &[false, false, false, true, true]);
        let m = threshold_residuals(&r, 3.0, Tail::Upper);
        assert_eq!(m.bits(), &[false, false, false, true, false]);
    }

    #[test]
    fn zero_residuals_give_empty_mask() {
        let r = ImageMatrix::new(4, 4, vec![0.0; 16]).unwrap();
        assert_eq!(threshold_residuals(&r, 3.0, Tail::Both).count(), 0);
    }

    #[test]
    fn postprocess_grows_solid_blob() {
        let mut m = BinaryMask::zeros(30, 30);
        for r in 10..15 {
            for c in 10..15 {
                m.set(r, c, true);
            }
        }
        let out = postprocess(&m, &DetectorConfig::default());
        assert_eq!(out.count(), 11 * 11);
        assert!(out.get(7, 7) && out.get(17, 17) && !out.get(6, 10));
    }

    #[test]
    fn postprocess_drops_isolated_pixels() {
        let mut m = BinaryMask::zeros(20, 20);
        for (r, c) in [(2, 3), (10, 10), (15, 4), (18, 18)] {
            m.set(r, c, true);
        }
        assert_eq!(postprocess(&m, &DetectorConfig::default()).count(), 0);
    }

    #[test]
    fn nearby_blobs_merge_after_dilation() {
        let mut m = BinaryMask::zeros(20, 40);
        for r in 8..11 {
            for c in 5..8 {
                m.set(r, c, true);
            }
            // Centers 8 px apart.
            for c in 13..16 {
                m.set(r, c, true);
            }
        }
        let out = postprocess(&m, &DetectorConfig::default());
        assert_eq!(connected_components(&out).len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig { opening_se: 4, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { dilation_se: 0, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig { control_limit: 0.0, ..Default::default() }.validate().is_err());
        assert!(DetectorConfig::default().validate().is_ok());
    }

    #[test]
    fn tiny_training_region_refused() {
        let img = ImageMatrix::new(10, 10, vec![1.0; 100]).unwrap();
        let region = Rect { row: 0, col: 0, rows: 1, cols: 1 };
        let err = detect(&img, &[], &region, &DetectorConfig::default(), &RobustConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateDesign(_)));
    }

    #[test]
    fn zero_training_pixels_rejected() {
        let mut px = vec![1.0; 100];
        px[23] = 0.0;
        let img = ImageMatrix::new(10, 10, px).unwrap();
        let region = Rect { row: 0, col: 0, rows: 5, cols: 5 };
        let err = detect(&img, &[], &region, &DetectorConfig::default(), &RobustConfig::default()).unwrap_err();
        assert_eq!(err, Error::NonPositivePixels(vec![(2, 3)]));
    }

    #[test]
    fn mismatched_covariate_rejected() {
        let img = ImageMatrix::new(10, 10, vec![1.0; 100]).unwrap();
        let cov = ImageMatrix::new(10, 9, vec![1.0; 90]).unwrap();
        let region = Rect { row: 0, col: 0, rows: 5, cols: 5 };
        let err = detect(&img, &[cov], &region, &DetectorConfig::default(), &RobustConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let region = Rect { row: 8, col: 0, rows: 5, cols: 5 };
        assert!(detect(&img, &[], &region, &DetectorConfig::default(), &RobustConfig::default()).is_err());
    }
}
