//! Breakpoints of the penalty marginal function and the two marginal
//! functions themselves.
//!
//! The penalty value function F(λ) = min_i (s_i + λρ_i) is the lower envelope
//! of one line per level. Starting from level 0 (active for large λ), each
//! step finds the largest λ at which another line catches up with the active
//! one; the lines meeting it there form the tie set, and the highest-index
//! member of the tie set becomes active next. The constrained value function
//! H(σ) is the step function s_k on [ρ_k, ρ_{k+1}).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levels::{LevelSequence, REL_TOL};

/// Output of [`breakpoints`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakpointSequence {
    #[serde(rename = "K")]
    pub k: usize,
    /// Active level indices t₀ < t₁ < … < t_K = L.
    pub t: Vec<usize>,
    /// Breakpoints λ₀ > λ₁ > … > λ_K = 0.
    pub lambda: Vec<f64>,
    /// `tie_sets[0] = {0}` is the seed set; `tie_sets[i + 1]` holds the level
    /// indices whose lines meet the active line at `lambda[i]`.
    pub tie_sets: Vec<Vec<usize>>,
    /// Near-collisions of ρ values met while scanning.
    pub warnings: Vec<String>,
}

impl BreakpointSequence {
    /// Tie set at breakpoint `i` (0 ≤ i < K).
    pub fn ties_at(&self, i: usize) -> &[usize] {
        &self.tie_sets[i + 1]
    }

    /// Whether `lambda` equals the breakpoint `lambda[i]` within relative
    /// tolerance.
    pub fn is_breakpoint(&self, i: usize, lambda: f64) -> bool {
        let b = self.lambda[i];
        (lambda - b).abs() <= REL_TOL * b.abs().max(f64::MIN_POSITIVE)
    }

    /// Union of all tie sets, excluding the seed set.
    pub fn tied_levels(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.tie_sets[1..].iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Upper end of piece `i`; `None` stands for +∞.
    pub fn upper(&self, i: usize) -> Option<f64> {
        if i == 0 {
            None
        } else {
            Some(self.lambda[i - 1])
        }
    }
}

/// Runs the breakpoint iteration over a level sequence.
pub fn breakpoints(seq: &LevelSequence) -> BreakpointSequence {
    let s = seq.s();
    let rho = seq.rho();
    let last = seq.last;

    let mut t = Vec::new();
    let mut lambda = Vec::new();
    let mut tie_sets = vec![vec![0usize]];
    let mut warnings = Vec::new();

    while !tie_sets.last().unwrap().contains(&last) {
        let ti = *tie_sets.last().unwrap().iter().max().unwrap();
        t.push(ti);
        let ratios: Vec<(usize, f64)> = (ti + 1..=last)
            .map(|j| {
                let gap = rho[j] - rho[ti];
                if gap <= seq.tol {
                    warnings.push(format!(
                        "rho[{j}] - rho[{ti}] = {gap:e} is within the level tolerance"
                    ));
                }
                (j, (s[ti] - s[j]) as f64 / gap)
            })
            .collect();
        let best = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let tol = REL_TOL * best.abs();
        let ties: Vec<usize> = ratios
            .iter()
            .filter(|r| (r.1 - best).abs() <= tol)
            .map(|r| r.0)
            .collect();
        lambda.push(best);
        tie_sets.push(ties);
    }
    t.push(last);
    lambda.push(0.0);
    BreakpointSequence {
        k: t.len() - 1,
        t,
        lambda,
        tie_sets,
        warnings,
    }
}

/// One line segment of F.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FPiece {
    /// Interval (lambda_lo, lambda_hi]; `lambda_hi = None` means +∞.
    pub lambda_lo: f64,
    pub lambda_hi: Option<f64>,
    pub level: usize,
    pub slope: f64,
    pub intercept: f64,
}

/// The penalty marginal function as a list of pieces, largest λ first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalF {
    pub pieces: Vec<FPiece>,
    #[serde(skip)]
    bp: BreakpointSequence,
}

/// Value of F at a point with the levels whose lines attain it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FValue {
    pub value: f64,
    pub active: Vec<usize>,
}

impl MarginalF {
    /// Index of the piece containing λ under the (λ_i, λ_{i−1}] convention.
    fn piece_index(&self, lambda: f64) -> usize {
        (0..=self.bp.k)
            .find(|&i| lambda > self.bp.lambda[i])
            .unwrap_or(self.bp.k)
    }

    pub fn eval(&self, lambda: f64) -> Result<FValue> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let i = self.piece_index(lambda);
        let piece = &self.pieces[i];
        let value = piece.intercept + lambda * piece.slope;
        Ok(FValue {
            value,
            active: active_levels(&self.bp, lambda),
        })
    }

    pub fn breakpoints(&self) -> &BreakpointSequence {
        &self.bp
    }
}

/// Piecewise description of F.
pub fn marginal_f(seq: &LevelSequence, bp: &BreakpointSequence) -> MarginalF {
    let pieces = (0..=bp.k)
        .map(|i| {
            let level = bp.t[i];
            FPiece {
                lambda_lo: bp.lambda[i],
                lambda_hi: bp.upper(i),
                level,
                slope: seq.levels[level].rho,
                intercept: seq.levels[level].s as f64,
            }
        })
        .collect();
    MarginalF {
        pieces,
        bp: bp.clone(),
    }
}

/// Level indices whose optimal sets make up the penalty optimal set at λ:
/// `{t_i}` inside (λ_i, λ_{i−1}), `Λ_i ∪ {t_i}` at λ = λ_i.
pub fn active_levels(bp: &BreakpointSequence, lambda: f64) -> Vec<usize> {
    for i in 0..bp.k {
        if bp.is_breakpoint(i, lambda) {
            let mut set = bp.ties_at(i).to_vec();
            set.push(bp.t[i]);
            set.sort_unstable();
            set.dedup();
            return set;
        }
    }
    let i = (0..=bp.k).find(|&i| lambda > bp.lambda[i]).unwrap_or(bp.k);
    vec![bp.t[i]]
}

/// Representation of the penalty optimal set at one λ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyOptimum {
    pub lambda: f64,
    pub value: f64,
    pub level_indices: Vec<usize>,
    /// `(level index, support, minimizer)` for every listed representative.
    pub representatives: Vec<(usize, Vec<usize>, Vec<f64>)>,
}

pub fn optimal_set_penalty(
    seq: &LevelSequence,
    bp: &BreakpointSequence,
    lambda: f64,
) -> Result<PenaltyOptimum> {
    let f = marginal_f(seq, bp).eval(lambda)?;
    let representatives = f
        .active
        .iter()
        .flat_map(|&i| {
            let level = &seq.levels[i];
            level
                .supports
                .iter()
                .zip(&level.representatives)
                .map(move |(s, x)| (i, s.clone(), x.clone()))
        })
        .collect();
    Ok(PenaltyOptimum {
        lambda,
        value: f.value,
        level_indices: f.active,
        representatives,
    })
}

/// One step of H: value `s` on [sigma_lo, sigma_hi); `sigma_hi = None` is +∞.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HPiece {
    pub sigma_lo: f64,
    pub sigma_hi: Option<f64>,
    pub value: usize,
}

/// The constrained marginal function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalH {
    pub sigma_star: f64,
    pub pieces: Vec<HPiece>,
}

fn require_identity(seq: &LevelSequence) -> Result<()> {
    if !seq.phi.is_identity() {
        return Err(Error::Precondition(format!(
            "the constrained value function is read from levels under the identity penalty, got {}",
            seq.phi
        )));
    }
    Ok(())
}

/// Step table of H.
pub fn marginal_h_table(seq: &LevelSequence) -> Result<MarginalH> {
    require_identity(seq)?;
    let pieces = seq
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| HPiece {
            sigma_lo: l.rho,
            sigma_hi: seq.levels.get(i + 1).map(|n| n.rho),
            value: l.s,
        })
        .collect();
    Ok(MarginalH {
        sigma_star: seq.levels[0].rho,
        pieces,
    })
}

fn locate_sigma(seq: &LevelSequence, sigma: f64) -> Result<usize> {
    require_identity(seq)?;
    if !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("sigma must be finite, got {sigma}")));
    }
    seq.locate(sigma).ok_or(Error::Infeasible {
        sigma,
        sigma_star: seq.levels[0].rho,
    })
}

/// H(σ), the fewest nonzeros among points with residual at most σ.
pub fn marginal_h(seq: &LevelSequence, sigma: f64) -> Result<usize> {
    let k = locate_sigma(seq, sigma)?;
    Ok(seq.levels[k].s)
}

/// Representation of the constrained optimal set at one σ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstrainedOptimum {
    pub sigma: f64,
    pub k: usize,
    pub value: usize,
    /// True when the constrained optimal set equals the level set Ω_k;
    /// otherwise Ω_k is only a subset of it.
    pub exact: bool,
    pub representatives: Vec<(Vec<usize>, Vec<f64>)>,
}

pub fn optimal_set_constrained(seq: &LevelSequence, sigma: f64) -> Result<ConstrainedOptimum> {
    let k = locate_sigma(seq, sigma)?;
    let level = &seq.levels[k];
    Ok(ConstrainedOptimum {
        sigma,
        k,
        value: level.s,
        exact: k == seq.last || seq.on_level(k, sigma),
        representatives: level
            .supports
            .iter()
            .cloned()
            .zip(level.representatives.iter().cloned())
            .collect(),
    })
}

/// One line per level for plotting the arrangement whose lower envelope is F.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotLine {
    pub level_index: usize,
    pub slope: f64,
    pub intercept: f64,
    /// Closed λ range on which the line lies on the envelope; `None` when it
    /// never does. `lambda_hi = None` with `Some(lo)` means +∞.
    pub lambda_lo: Option<f64>,
    pub lambda_hi: Option<f64>,
    /// Whether the line is the envelope on a nondegenerate interval.
    pub active: bool,
}

pub fn plot_lines(seq: &LevelSequence, bp: &BreakpointSequence) -> Vec<PlotLine> {
    seq.levels
        .iter()
        .enumerate()
        .map(|(idx, l)| {
            let mut line = PlotLine {
                level_index: idx,
                slope: l.rho,
                intercept: l.s as f64,
                lambda_lo: None,
                lambda_hi: None,
                active: false,
            };
            if let Some(i) = bp.t.iter().position(|&t| t == idx) {
                line.active = true;
                line.lambda_lo = Some(bp.lambda[i]);
                line.lambda_hi = bp.upper(i);
            } else if let Some(i) = (0..bp.k).find(|&i| bp.ties_at(i).contains(&idx)) {
                line.lambda_lo = Some(bp.lambda[i]);
                line.lambda_hi = Some(bp.lambda[i]);
            }
            line
        })
        .collect()
}
