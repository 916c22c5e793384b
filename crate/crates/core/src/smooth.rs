//! The smooth squared-hinge penalty Φ(x) = ½(‖Ax − b‖₂ − σ)₊² and a hard
//! thresholding proximal-gradient solver for ‖x‖₀ + λΦ(x).
//!
//! The solver is a cross-check against exhaustive enumeration, not a method
//! with guarantees beyond monotone descent.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg::{norm2, spectral_norm, sub};
use crate::phi::Exponent;

/// Relative tolerance for the spectral-norm power iteration.
pub const SPECTRAL_TOL: f64 = 1e-12;

/// Safety factor of the default step below 1/(λ‖A‖₂²).
pub const DEFAULT_STEP_FACTOR: f64 = 0.99;

/// ‖x‖₀ + λ·½(‖Ax − b‖₂ − σ)₊² on a least-squares instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothPenaltyProblem {
    pub instance: Instance,
    pub sigma: f64,
    pub lambda: f64,
}

impl SmoothPenaltyProblem {
    pub fn new(instance: Instance, sigma: f64, lambda: f64) -> Result<Self> {
        if instance.p() != Exponent::Two {
            return Err(Error::InvalidInput("the smooth penalty is defined for p = 2".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self {
            instance,
            sigma,
            lambda,
        })
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.instance.n() {
            return Err(Error::DimensionMismatch {
                expected: self.instance.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// ‖x‖₀ + λΦ(x)
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        Ok(nnz as f64 + self.lambda * phi_big_eval(self, x)?)
    }
}

/// Φ(x) = ½(‖Ax − b‖₂ − σ)₊²
pub fn phi_big_eval(prob: &SmoothPenaltyProblem, x: &[f64]) -> Result<f64> {
    prob.check_len(x)?;
    let t = (prob.instance.residual_norm(x) - prob.sigma).max(0.0);
    Ok(0.5 * t * t)
}

/// ∇Φ(x) = (1 − σ/‖Ax − b‖₂) Aᵀ(Ax − b) when the residual exceeds σ, else 0.
pub fn phi_big_grad(prob: &SmoothPenaltyProblem, x: &[f64]) -> Result<Vec<f64>> {
    prob.check_len(x)?;
    let r = prob.instance.residual(x);
    let rn = norm2(&r);
    if rn <= prob.sigma {
        return Ok(vec![0.0; x.len()]);
    }
    let scale = 1.0 - prob.sigma / rn;
    Ok(prob
        .instance
        .a()
        .tr_mul_vec(&r)
        .into_iter()
        .map(|g| scale * g)
        .collect())
}

/// ‖A‖₂², a Lipschitz constant of ∇Φ.
pub fn lipschitz_bound(prob: &SmoothPenaltyProblem) -> Result<f64> {
    let s = spectral_norm(prob.instance.a(), SPECTRAL_TOL)?;
    Ok(s.value * s.value)
}

/// 0.99 / (λ‖A‖₂²), or 1 for A = 0 where every positive step is admissible.
pub fn default_step(prob: &SmoothPenaltyProblem) -> Result<f64> {
    let l = lipschitz_bound(prob)?;
    Ok(if l > 0.0 {
        DEFAULT_STEP_FACTOR / (prob.lambda * l)
    } else {
        1.0
    })
}

/// Keeps entries with |v| ≥ threshold, zeroes the rest.
pub fn hard_threshold(v: &[f64], threshold: f64) -> Vec<f64> {
    v.iter().map(|&e| if e.abs() >= threshold { e } else { 0.0 }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub support_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

fn support(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&j| x[j] != 0.0).collect()
}

/// Iterates x⁺ = HardThreshold(x − τλ∇Φ(x), √(2τ)) until the support and
/// the objective are unchanged (absolute 1e-12) or `max_iters` is reached.
///
/// The step must satisfy 0 < τ ≤ 1/(λ‖A‖₂²), the Lipschitz constant of the
/// smooth part λΦ.
pub fn prox_grad_solve(
    prob: &SmoothPenaltyProblem,
    x0: &[f64],
    max_iters: usize,
    step: f64,
) -> Result<SolveResult> {
    prob.check_len(x0)?;
    let l = lipschitz_bound(prob)?;
    let limit = if l > 0.0 { 1.0 / (prob.lambda * l) } else { f64::INFINITY };
    if !(step > 0.0 && step <= limit * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "step must lie in (0, 1/(lambda*||A||^2)] = (0, {limit}], got {step}"
        )));
    }
    let threshold = (2.0 * step).sqrt();
    let mut x = x0.to_vec();
    let mut objective = prob.objective(&x)?;
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective,
        support_size: support(&x).len(),
    }];
    for it in 1..=max_iters {
        let g = phi_big_grad(prob, &x)?;
        let moved: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(xi, gi)| xi - step * prob.lambda * gi)
            .collect();
        let next = hard_threshold(&moved, threshold);
        let next_obj = prob.objective(&next)?;
        let stable = support(&next) == support(&x) && (next_obj - objective).abs() <= 1e-12;
        x = next;
        objective = next_obj;
        trace.push(TraceRow {
            iteration: it,
            objective,
            support_size: support(&x).len(),
        });
        if stable {
            return Ok(SolveResult {
                x,
                objective,
                iterations: it,
                converged: true,
                trace,
            });
        }
    }
    Ok(SolveResult {
        x,
        objective,
        iterations: max_iters,
        converged: false,
        trace,
    })
}

/// Central-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-6;

/// Margin above σ required of sample points in [`gradient_check`].
pub const HINGE_MARGIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCheckReport {
    pub points: usize,
    pub pairs: usize,
    /// max ‖∇Φ − FD‖₂ / max(1, ‖∇Φ‖₂) over the sample points
    pub max_gradient_error: f64,
    /// max ‖∇Φ(x) − ∇Φ(y)‖₂ / ‖x − y‖₂ over the sample pairs
    pub max_lipschitz_ratio: f64,
    pub lipschitz_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn central_difference(prob: &SmoothPenaltyProblem, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for j in 0..x.len() {
        y[j] = x[j] + FD_STEP;
        let up = phi_big_eval(prob, &y)?;
        y[j] = x[j] - FD_STEP;
        let down = phi_big_eval(prob, &y)?;
        y[j] = x[j];
        out.push((up - down) / (2.0 * FD_STEP));
    }
    Ok(out)
}

/// A random point whose residual exceeds σ + [`HINGE_MARGIN`], drawn from a
/// box that doubles until such points appear.
fn active_point<R: Rng + ?Sized>(prob: &SmoothPenaltyProblem, rng: &mut R) -> Result<Vec<f64>> {
    let n = prob.instance.n();
    let mut radius = 1.0;
    for _ in 0..64 {
        for _ in 0..16 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
            if prob.instance.residual_norm(&x) > prob.sigma + HINGE_MARGIN {
                return Ok(x);
            }
        }
        radius *= 2.0;
    }
    Err(Error::Precondition(format!(
        "no point with residual above sigma + {HINGE_MARGIN} was found"
    )))
}

/// Compares ∇Φ with central differences at `points` random points where the
/// hinge is active, and samples the Lipschitz ratio of ∇Φ over `pairs`
/// random pairs.
pub fn gradient_check<R: Rng + ?Sized>(
    prob: &SmoothPenaltyProblem,
    points: usize,
    pairs: usize,
    tol: f64,
    rng: &mut R,
) -> Result<GradientCheckReport> {
    let mut max_gradient_error: f64 = 0.0;
    for _ in 0..points {
        let x = active_point(prob, rng)?;
        let g = phi_big_grad(prob, &x)?;
        let fd = central_difference(prob, &x)?;
        max_gradient_error = max_gradient_error.max(norm2(&sub(&g, &fd)) / norm2(&g).max(1.0));
    }
    let n = prob.instance.n();
    let radius = (prob.instance.b_norm() / prob.instance.a().max_abs().max(f64::MIN_POSITIVE)).max(1.0);
    let mut max_lipschitz_ratio: f64 = 0.0;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
        let d = norm2(&sub(&x, &y));
        if d == 0.0 {
            continue;
        }
        let gd = norm2(&sub(&phi_big_grad(prob, &x)?, &phi_big_grad(prob, &y)?));
        max_lipschitz_ratio = max_lipschitz_ratio.max(gd / d);
    }
    let bound = lipschitz_bound(prob)?;
    Ok(GradientCheckReport {
        points,
        pairs,
        max_gradient_error,
        max_lipschitz_ratio,
        lipschitz_bound: bound,
        tolerance: tol,
        pass: max_gradient_error <= tol && max_lipschitz_ratio <= bound * (1.0 + 1e-9),
    })
}
