//! Quasi-Newton (BFGS) minimization with a strong-Wolfe line search.
//!
//! The objective returns `None` at infeasible points; the line search then
//! shrinks the step toward the last feasible point.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when `|grad|_inf <= grad_tol`.
    pub grad_tol: f64,
    /// Relative objective change counted as a stalled iteration.
    pub rel_tol: f64,
    /// Consecutive stalled iterations before giving up.
    pub stall_limit: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-6, rel_tol: 1e-9, stall_limit: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    Stalled,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: DVector<f64>,
    pub f: f64,
    pub grad: DVector<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective value at the start and after every accepted step.
    pub trace: Vec<f64>,
}

impl BfgsOutcome {
    pub fn grad_norm(&self) -> f64 {
        self.grad.amax()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

struct Point {
    alpha: f64,
    f: f64,
    slope: f64,
    x: DVector<f64>,
    g: DVector<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
/// Slope bound of the approximate Wolfe condition, `(2 * 0.1 - 1) * slope0`.
const APPROX_SLOPE: f64 = -0.8;
/// Relative objective change treated as rounding noise.
const NOISE: f64 = 1e-11;
const MAX_EVALS: usize = 60;
/// Minimizes `objective`, which returns the value and gradient, or `None`
/// when `x` is outside the feasible set. `x0` must be feasible.
pub fn minimize<F>(mut objective: F, x0: DVector<f64>, opts: &BfgsOptions) -> Option<BfgsOutcome>
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let n = x0.len();
    let (mut f, mut g) = objective(&x0)?;
    if !f.is_finite() {
        return None;
    }
    let mut x = x0;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut trace = vec![f];
    let mut stalled = 0;
    let mut iterations = 0;

    let termination = loop {
        if g.amax() <= opts.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIterations;
        }
        let mut dir = -(&h * &g);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            // Lost descent; restart from steepest descent.
            h = DMatrix::identity(n, n);
            first = true;
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        let alpha0 = if first { 1.0 / g.amax().max(1.0) } else { 1.0 };
        let Some(p) = line_search(&mut objective, &x, f, slope, &dir, alpha0) else {
            break Termination::LineSearchFailed;
        };
        iterations += 1;

        let s = &p.x - &x;
        let y = &p.g - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (H y s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
            h -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }

        let rel = (f - p.f).abs() / f.abs().max(1.0);
        let grad_shrank = p.g.amax() < g.amax();
        x = p.x;
        f = p.f;
        g = p.g;
        trace.push(f);
        if rel <= opts.rel_tol && !grad_shrank {
            stalled += 1;
            if stalled >= opts.stall_limit && g.amax() > opts.grad_tol {
                break Termination::Stalled;
            }
        } else {
            stalled = 0;
        }
    };

    Some(BfgsOutcome { x, f, grad: g, iterations, termination, trace })
}

fn line_search<F>(
    objective: &mut F,
    x: &DVector<f64>,
    f0: f64,
    slope0: f64,
    dir: &DVector<f64>,
    alpha0: f64,
) -> Option<Point>
where
    F: FnMut(&DVector<f64>) -> Option<(f64, DVector<f64>)>,
{
    let mut evals = 0;
    let mut eval = |alpha: f64, evals: &mut usize| -> Option<Point> {
        *evals += 1;
        let xa = x + dir * alpha;
        let (fa, ga) = objective(&xa)?;
        if !fa.is_finite() || ga.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let slope = ga.dot(dir);
        Some(Point { alpha, f: fa, slope, x: xa, g: ga })
    };
    let noise = NOISE * f0.abs();
    let armijo = |p: &Point| p.f <= f0 + C1 * p.alpha * slope0;
    let curvature_ok = |p: &Point| p.slope.abs() <= -C2 * slope0;
    // Strong Wolfe, or approximate Wolfe once value differences are rounding noise.
    let accept = |p: &Point| {
        (armijo(p) && curvature_ok(p))
            || (p.f <= f0 + noise && p.slope >= C2 * slope0 && p.slope <= APPROX_SLOPE * slope0)
    };
    let too_high = |p: &Point| !armijo(p) && p.f > f0 + noise;

    let mut best: Option<Point> = None;
    let keep_best = |p: &Point, best: &mut Option<Point>| {
        if p.f < f0 && best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(Point { alpha: p.alpha, f: p.f, slope: p.slope, x: p.x.clone(), g: p.g.clone() });
        }
    };

    // Invariant: lo has a negative slope and an acceptable value; hi, once
    // set, is infeasible, too high, or has a nonnegative slope.
    let mut lo = Point { alpha: 0.0, f: f0, slope: slope0, x: x.clone(), g: DVector::zeros(0) };
    let mut alpha = alpha0;
    let mut hi_alpha: Option<f64> = None;

    while evals < MAX_EVALS {
        let p = match eval(alpha, &mut evals) {
            Some(p) => p,
            None => {
                hi_alpha = Some(alpha);
                alpha = 0.5 * (lo.alpha + alpha);
                if alpha - lo.alpha <= 1e-16 * alpha.max(1.0) {
                    break;
                }
                continue;
            }
        };
        keep_best(&p, &mut best);
        if accept(&p) {
            return Some(p);
        }
        if too_high(&p) || p.f > lo.f + noise || p.slope >= 0.0 {
            hi_alpha = Some(p.alpha);
            break;
        }
        lo = p;
        match hi_alpha {
            // A previous infeasible trial bounds the expansion.
            Some(h) => alpha = 0.5 * (lo.alpha + h),
            None => alpha *= 2.0,
        }
    }

    if let Some(mut hi) = hi_alpha {
        while evals < MAX_EVALS && (hi - lo.alpha).abs() > 1e-16 * hi.abs().max(1.0) {
            let trial = 0.5 * (lo.alpha + hi);
            let Some(p) = eval(trial, &mut evals) else {
                hi = trial;
                continue;
            };
            keep_best(&p, &mut best);
            if accept(&p) {
                return Some(p);
            }
            if too_high(&p) || p.f > lo.f + noise || p.slope >= 0.0 {
                hi = p.alpha;
            } else {
                lo = p;
            }
        }
    }
    best
}
