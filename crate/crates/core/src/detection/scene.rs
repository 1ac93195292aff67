//! Seeded synthetic scene for exercising the detector end to end.
//!
//! A ground mean field (forest background with darker patches) is sampled
//! into three independent reference images. The interest image follows the
//! log-linear Rayleigh regression on those references, and a grid of bright
//! square targets is painted on top. The training rectangle is the bounding
//! box of the target grid plus a margin, so the training sample is
//! contaminated by the targets.

use serde::{Deserialize, Serialize};

use super::{ImageMatrix, Rect};
use crate::dist::RayleighMean;
use crate::error::{Error, Result};
use crate::rng;

/// Elliptical patch of darker ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub row: f64,
    pub col: f64,
    pub half_height: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Ground mean of the reference images outside patches.
    pub background_mean: f64,
    pub patch_mean: f64,
    pub patches: Vec<Patch>,
    pub reference_images: usize,
    /// Coefficient of each reference image in the interest image's log mean.
    pub reference_slope: f64,
    /// Interest-image mean where every reference equals `background_mean`.
    pub interest_mean: f64,
    pub target_amplitude: f64,
    pub target_size: usize,
    pub grid: usize,
    pub spacing: usize,
    /// Center of the top-left target.
    pub origin: (usize, usize),
    /// Margin between the target grid and the training rectangle edge.
    pub training_margin: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            rows: 200,
            cols: 200,
            seed: 7,
            background_mean: 0.2,
            patch_mean: 0.05,
            patches: vec![
                Patch { row: 150.0, col: 45.0, half_height: 14.0, half_width: 10.0 },
                Patch { row: 45.0, col: 160.0, half_height: 10.0, half_width: 16.0 },
                Patch { row: 155.0, col: 150.0, half_height: 18.0, half_width: 12.0 },
                Patch { row: 110.0, col: 180.0, half_height: 8.0, half_width: 8.0 },
            ],
            reference_images: 3,
            reference_slope: 3.0,
            interest_mean: 0.2,
            target_amplitude: 10.0,
            target_size: 3,
            grid: 5,
            spacing: 14,
            origin: (40, 40),
            training_margin: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub interest: ImageMatrix,
    pub references: Vec<ImageMatrix>,
    /// Target centers (row, col).
    pub truth: Vec<(f64, f64)>,
    pub training_region: Rect,
    /// Coefficients of the log-linear mean, intercept first.
    pub beta_true: Vec<f64>,
}

impl SceneParams {
    fn validate(&self) -> Result<()> {
        if self.target_size % 2 == 0 || self.target_size == 0 {
            return Err(Error::Config("target size must be odd".into()));
        }
        let half = self.target_size / 2;
        let span = self.spacing * self.grid.saturating_sub(1);
        let lo = self.origin.0.min(self.origin.1);
        if lo < half + self.training_margin
            || self.origin.0 + span + half + self.training_margin >= self.rows
            || self.origin.1 + span + half + self.training_margin >= self.cols
        {
            return Err(Error::Config("target grid and margin do not fit in the image".into()));
        }
        if !(self.background_mean > 0.0 && self.patch_mean > 0.0 && self.interest_mean > 0.0) {
            return Err(Error::Config("scene means must be positive".into()));
        }
        Ok(())
    }

    fn in_patch(&self, r: usize, c: usize) -> bool {
        self.patches.iter().any(|p| {
            let dr = (r as f64 - p.row) / p.half_height;
            let dc = (c as f64 - p.col) / p.half_width;
            dr * dr + dc * dc <= 1.0
        })
    }

    pub fn training_region(&self) -> Rect {
        let half = self.target_size / 2;
        let span = self.spacing * (self.grid - 1);
        let pad = half + self.training_margin;
        Rect {
            row: self.origin.0 - pad,
            col: self.origin.1 - pad,
            rows: span + 2 * pad + 1,
            cols: span + 2 * pad + 1,
        }
    }

    pub fn truth(&self) -> Vec<(f64, f64)> {
        (0..self.grid)
            .flat_map(|i| {
                (0..self.grid).map(move |j| {
                    ((self.origin.0 + i * self.spacing) as f64, (self.origin.1 + j * self.spacing) as f64)
                })
            })
            .collect()
    }

    pub fn beta_true(&self) -> Vec<f64> {
        let m = self.reference_images as f64;
        let intercept = self.interest_mean.ln() - self.reference_slope * m * self.background_mean;
        let mut beta = vec![intercept];
        beta.extend(std::iter::repeat_n(self.reference_slope, self.reference_images));
        beta
    }
}

pub fn synth_scene(params: &SceneParams) -> Result<SyntheticScene> {
    params.validate()?;
    let (rows, cols) = (params.rows, params.cols);
    let ground: Vec<f64> = (0..rows * cols)
        .map(|p| if params.in_patch(p / cols, p % cols) { params.patch_mean } else { params.background_mean })
        .collect();

    let mut references = Vec::with_capacity(params.reference_images);
    for j in 0..params.reference_images {
        let mut r = rng::stream(params.seed, j as u64 + 1);
        let px = ground.iter().map(|&m| RayleighMean::new(m).expect("positive").sample(&mut r)).collect();
        references.push(ImageMatrix::new(rows, cols, px)?);
    }

    let beta = params.beta_true();
    let mut r = rng::stream(params.seed, 0);
    let mut interest: Vec<f64> = (0..rows * cols)
        .map(|p| {
            let eta = beta[0] + references.iter().zip(&beta[1..]).map(|(img, b)| b * img.pixels()[p]).sum::<f64>();
            RayleighMean::new(eta.exp()).expect("positive").sample(&mut r)
        })
        .collect();

    let truth = params.truth();
    let half = (params.target_size / 2) as isize;
    for &(tr, tc) in &truth {
        for dr in -half..=half {
            for dc in -half..=half {
                let (rr, cc) = ((tr as isize + dr) as usize, (tc as isize + dc) as usize);
                interest[rr * cols + cc] = params.target_amplitude;
            }
        }
    }

    Ok(SyntheticScene {
        interest: ImageMatrix::new(rows, cols, interest)?,
        references,
        truth,
        training_region: params.training_region(),
        beta_true: beta,
    })
}

impl SyntheticScene {
    /// Fraction of training pixels covered by targets.
    pub fn training_contamination(&self, params: &SceneParams) -> f64 {
        let covered = self.truth.len() * params.target_size * params.target_size;
        covered as f64 / self.training_region.area() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scene_layout() {
        let p = SceneParams::default();
        let s = synth_scene(&p).unwrap();
        assert_eq!(s.truth.len(), 25);
        assert_eq!(s.references.len(), 3);
        let frac = s.training_contamination(&p);
        assert!((frac - 0.05).abs() < 0.005, "{frac}");
        for &(r, c) in &s.truth {
            assert!(s.training_region.contains(r as usize, c as usize));
            assert_eq!(s.interest.get(r as usize, c as usize), 10.0);
        }
        assert!(s.interest.pixels().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn deterministic() {
        let p = SceneParams::default();
        assert_eq!(synth_scene(&p).unwrap(), synth_scene(&p).unwrap());
        let q = SceneParams { seed: 8, ..SceneParams::default() };
        assert_ne!(synth_scene(&p).unwrap().interest, synth_scene(&q).unwrap().interest);
    }

    #[test]
    fn rejects_grid_outside_image() {
        let p = SceneParams { origin: (2, 2), ..SceneParams::default() };
        assert!(synth_scene(&p).is_err());
    }
}
