//! How the penalty optimal sets relate to the constrained optimal set.
//!
//! With levels computed under a strictly increasing penalty φ, the
//! constrained problem at σ sits on level k with ρ_k ≤ φ(σ) < ρ_{k+1}. If k
//! is an active level t_j, the two optimal sets meet on the open interval
//! (λ_j, λ_{j−1}) and at its endpoints. If k only appears in a tie set Λ_j,
//! they meet exactly at λ = λ_j. Otherwise they never meet.
//!
//! The same machinery gives the thresholds above which the penalty problem
//! reproduces the constrained one: for noiseless data (σ = 0) and for a
//! penalty that vanishes exactly on [0, σ].

use rayon::prelude::*;
use serde::Serialize;

use crate::breakpoints::{breakpoints, BreakpointSequence};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::levels::{levels, LevelSequence, ResidualStaircase, SupportFit, REL_TOL};
use crate::phi::{Exponent, PhiSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RelationCase {
    /// k is an active level.
    #[serde(rename = "IN_T")]
    InT,
    /// k is in a tie set but never active.
    #[serde(rename = "IN_TIESETS_NOT_T")]
    InTiesetsNotT,
    /// The optimal sets are disjoint for every λ > 0.
    #[serde(rename = "NEVER")]
    Never,
}

impl RelationCase {
    pub fn name(self) -> &'static str {
        match self {
            RelationCase::InT => "IN_T",
            RelationCase::InTiesetsNotT => "IN_TIESETS_NOT_T",
            RelationCase::Never => "NEVER",
        }
    }
}

/// λ values at which the two optimal sets intersect.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaWindow {
    /// Open interval (lo, hi); `hi = None` is +∞. The finite endpoints also
    /// belong to the intersection set.
    Open { lo: f64, hi: Option<f64> },
    Point { at: f64 },
    Empty,
}

impl LambdaWindow {
    /// Whether λ lies in the intersection set (endpoints included).
    pub fn contains(&self, lambda: f64) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= REL_TOL * b.abs().max(f64::MIN_POSITIVE);
        match *self {
            LambdaWindow::Open { lo, hi } => {
                (lambda > lo || near(lambda, lo)) && hi.is_none_or(|h| lambda < h || near(lambda, h))
            }
            LambdaWindow::Point { at } => near(lambda, at),
            LambdaWindow::Empty => false,
        }
    }
}

/// How the penalty optimal set relates to the constrained one inside the
/// window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetRelation {
    Equal,
    StrictSubset,
    Subset,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationReport {
    pub sigma: f64,
    pub phi_sigma: f64,
    pub k: usize,
    pub case: RelationCase,
    pub case_name: &'static str,
    pub j: Option<usize>,
    pub lambda_window: LambdaWindow,
    pub intersection_level: Option<usize>,
    /// Relation of the penalty optimal set to the constrained one on the
    /// open window (IN_T only).
    pub subset: Option<SubsetRelation>,
}

/// Classifies σ against levels and breakpoints computed under the strictly
/// increasing penalty `seq.phi`.
pub fn classify(seq: &LevelSequence, bp: &BreakpointSequence, sigma: f64) -> Result<RelationReport> {
    if !seq.phi.is_strictly_increasing() {
        return Err(Error::Precondition(format!(
            "classification needs a strictly increasing penalty, got {}",
            seq.phi
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    let phi_sigma = seq.phi.value(sigma);
    let k = match seq.locate(phi_sigma) {
        Some(k) if k < seq.last => k,
        _ => {
            return Err(Error::Domain(format!(
                "phi(sigma) = {phi_sigma} must lie in [rho_0, rho_L) = [{}, {})",
                seq.levels[0].rho, seq.levels[seq.last].rho
            )))
        }
    };
    let mut report = RelationReport {
        sigma,
        phi_sigma,
        k,
        case: RelationCase::Never,
        case_name: RelationCase::Never.name(),
        j: None,
        lambda_window: LambdaWindow::Empty,
        intersection_level: None,
        subset: None,
    };
    if let Some(j) = bp.t.iter().position(|&t| t == k) {
        report.case = RelationCase::InT;
        report.j = Some(j);
        report.lambda_window = LambdaWindow::Open {
            lo: bp.lambda[j],
            hi: bp.upper(j),
        };
        report.intersection_level = Some(k);
        report.subset = Some(if seq.on_level(k, phi_sigma) {
            SubsetRelation::Equal
        } else if seq.p == Some(Exponent::Two) {
            SubsetRelation::StrictSubset
        } else {
            SubsetRelation::Subset
        });
    } else if let Some(j) = (0..bp.k).find(|&j| bp.ties_at(j).contains(&k)) {
        report.case = RelationCase::InTiesetsNotT;
        report.j = Some(j);
        report.lambda_window = LambdaWindow::Point { at: bp.lambda[j] };
        report.intersection_level = Some(k);
    }
    report.case_name = report.case.name();
    Ok(report)
}

/// Convenience wrapper: levels under `Power(p)` from the staircase, then
/// [`classify`].
pub fn classify_instance(st: &ResidualStaircase, sigma: f64) -> Result<RelationReport> {
    let phi = PhiSpec::Power { p: st.instance().p() };
    let seq = levels(st, phi)?;
    classify(&seq, &breakpoints(&seq), sigma)
}

/// A threshold λ* beyond which the penalty problem reproduces the
/// constrained problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub lambda_star: f64,
    /// Set when every λ > 0 already gives equal optimal sets.
    pub all_lambda_exact: bool,
    pub levels: LevelSequence,
    pub breakpoints: BreakpointSequence,
}

/// λ* for `Ax = b`: requires a consistent system.
pub fn noiseless_threshold(st: &ResidualStaircase, phi: PhiSpec) -> Result<Threshold> {
    let sigma_star = st.sigma_star();
    if sigma_star > st.residual_tol() {
        return Err(Error::Infeasible {
            sigma: 0.0,
            sigma_star,
        });
    }
    if !phi.is_strictly_increasing() {
        return Err(Error::Precondition(format!(
            "the noiseless threshold needs a strictly increasing penalty, got {phi}"
        )));
    }
    let seq = levels(st, phi)?;
    let bp = breakpoints(&seq);
    Ok(Threshold {
        lambda_star: bp.lambda[0],
        all_lambda_exact: seq.last == 0,
        levels: seq,
        breakpoints: bp,
    })
}

/// λ* for a penalty that vanishes exactly on [0, σ].
pub fn exact_penalty_threshold(st: &ResidualStaircase, phi: PhiSpec, sigma: f64) -> Result<Threshold> {
    if !phi.properties().exact_for(sigma) {
        return Err(Error::Precondition(format!(
            "{phi} does not vanish exactly on [0, {sigma}]: the penalty must be zero up to sigma and positive beyond it"
        )));
    }
    let sigma_star = st.sigma_star();
    if sigma < sigma_star - st.residual_tol() {
        return Err(Error::Infeasible { sigma, sigma_star });
    }
    let seq = levels(st, phi)?;
    let bp = breakpoints(&seq);
    Ok(Threshold {
        lambda_star: bp.lambda[0],
        all_lambda_exact: seq.last == 0,
        levels: seq,
        breakpoints: bp,
    })
}

/// Per-λ comparison of the two optimal sets by exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessSample {
    pub lambda: f64,
    pub above_threshold: bool,
    pub penalty_value: f64,
    pub constrained_value: usize,
    pub penalty_supports: Vec<Vec<usize>>,
    pub constrained_supports: Vec<Vec<usize>>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub sigma: f64,
    pub lambda_star: f64,
    pub samples: Vec<ExactnessSample>,
    /// Whether every sample above the threshold passed.
    pub all_pass_above_threshold: bool,
}

/// Supports minimizing |Λ| + λ·φ(r_Λ) over every support, with the minimum.
pub fn brute_force_penalty<'a>(
    fits: impl Iterator<Item = &'a SupportFit>,
    phi: &PhiSpec,
    lambda: f64,
) -> (f64, Vec<Vec<usize>>) {
    let scored: Vec<(f64, &SupportFit)> = fits
        .map(|f| (f.len() as f64 + lambda * phi.value(f.residual), f))
        .collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let tol = REL_TOL * best.abs().max(1.0);
    let supports = scored
        .iter()
        .filter(|s| s.0 <= best + tol)
        .map(|s| s.1.support.clone())
        .collect();
    (best, supports)
}

/// Supports of fewest columns with residual at most σ, with that count.
pub fn brute_force_constrained<'a>(
    fits: impl Iterator<Item = &'a SupportFit> + Clone,
    sigma: f64,
    residual_tol: f64,
) -> Option<(usize, Vec<Vec<usize>>)> {
    let feasible = |f: &&SupportFit| f.residual <= sigma + residual_tol;
    let best = fits.clone().filter(feasible).map(|f| f.len()).min()?;
    let supports = fits
        .filter(feasible)
        .filter(|f| f.len() == best)
        .map(|f| f.support.clone())
        .collect();
    Some((best, supports))
}

pub fn verify_exactness(
    st: &ResidualStaircase,
    phi: PhiSpec,
    sigma: f64,
    lambdas: &[f64],
) -> Result<ExactnessReport> {
    let threshold = exact_penalty_threshold(st, phi, sigma)?;
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("lambda samples must be positive, got {l}")));
    }
    let (h, constrained) = brute_force_constrained(st.all_fits(), sigma, st.residual_tol())
        .ok_or(Error::Infeasible {
            sigma,
            sigma_star: st.sigma_star(),
        })?;
    let samples: Vec<ExactnessSample> = lambdas
        .par_iter()
        .map(|&lambda| {
            let (value, penalty) = brute_force_penalty(st.all_fits(), &phi, lambda);
            let pass = penalty == constrained && (value - h as f64).abs() <= REL_TOL * value.max(1.0);
            ExactnessSample {
                lambda,
                above_threshold: threshold.all_lambda_exact || lambda > threshold.lambda_star,
                penalty_value: value,
                constrained_value: h,
                penalty_supports: penalty,
                constrained_supports: constrained.clone(),
                pass,
            }
        })
        .collect();
    Ok(ExactnessReport {
        sigma,
        lambda_star: threshold.lambda_star,
        all_pass_above_threshold: samples.iter().filter(|s| s.above_threshold).all(|s| s.pass),
        samples,
    })
}

/// Staircase plus [`verify_exactness`] in one call.
pub fn verify_exactness_for(
    inst: &Instance,
    phi: PhiSpec,
    sigma: f64,
    lambdas: &[f64],
) -> Result<ExactnessReport> {
    verify_exactness(&ResidualStaircase::compute(inst)?, phi, sigma, lambdas)
}
