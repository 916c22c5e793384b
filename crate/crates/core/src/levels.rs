//! Residual staircase and level sequence.
//!
//! The staircase records, for every cardinality budget k, the smallest residual
//! `min { ‖Ax − b‖_p : ‖x‖₀ ≤ k }` found by enumerating every support. The level
//! sequence is the alternating sparsest-cardinality / smallest-penalty
//! iteration: starting from the smallest attainable penalty value ρ₀ and the
//! sparsest cardinality s₀ that reaches it, each step lowers the budget to
//! s_i − 1, records the best penalty value ρ_{i+1} under that budget and the
//! sparsest cardinality s_{i+1} reaching it, until s = 0.
//!
//! Both are computed from a single enumeration: per-support fits are pure and
//! evaluated in parallel, then collected in lexicographic support order so
//! every downstream tie set is deterministic.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::cardinality;
use crate::error::{Error, Result};
use crate::instance::{Instance, DEFAULT_MAX_SUPPORTS};
use crate::linalg::{l1_regression, least_squares, numerical_rank, RANK_TOL};
use crate::phi::{Exponent, PhiSpec};

/// Relative tolerance for residual ties and penalty-value equality.
pub const REL_TOL: f64 = 1e-9;

/// The best fit on one support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportFit {
    /// Sorted column indices (0-based).
    pub support: Vec<usize>,
    /// Coefficients on `support`, in the same order.
    pub coefficients: Vec<f64>,
    /// `min ‖A_Λ z − b‖_p`
    pub residual: f64,
}

impl SupportFit {
    /// The fit embedded in ℝⁿ.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&j, &c) in self.support.iter().zip(&self.coefficients) {
            x[j] = c;
        }
        x
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Canonical best fit on a support: minimum-norm least squares for p = 2,
/// the lexicographic l1 vertex for p = 1.
pub fn fit_support(inst: &Instance, support: &[usize]) -> Result<SupportFit> {
    let Some(sub) = inst.a().select_columns(support) else {
        return Ok(SupportFit {
            support: Vec::new(),
            coefficients: Vec::new(),
            residual: inst.b_norm(),
        });
    };
    let coefficients = match inst.p() {
        Exponent::Two => least_squares(&sub, inst.b())?.minimizer,
        Exponent::One => l1_regression(&sub, inst.b())?.minimizer,
    };
    let mut fit = SupportFit {
        support: support.to_vec(),
        coefficients,
        residual: 0.0,
    };
    fit.residual = inst.residual_norm(&fit.dense(inst.n()));
    Ok(fit)
}

/// Total number of supports, 2ⁿ, checked against both enumeration guards.
pub fn check_enumeration(inst: &Instance, max_supports: u128) -> Result<u128> {
    let n = inst.n();
    if n > inst.max_enumeration_cols() {
        let widest = binomial(n, n / 2);
        return Err(Error::ResourceLimit {
            what: format!(
                "column count n = {n} (largest layer C({n},{}) = {widest})",
                n / 2
            ),
            count: n as u128,
            limit: inst.max_enumeration_cols() as u128,
        });
    }
    let total = 1u128 << n;
    if total > max_supports {
        return Err(Error::ResourceLimit {
            what: format!("supports sum_k C({n},k)"),
            count: total,
            limit: max_supports,
        });
    }
    Ok(total)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Every support of the instance, grouped by cardinality, each group in
/// lexicographic order.
pub fn enumerate_fits(inst: &Instance, max_supports: u128) -> Result<Vec<Vec<SupportFit>>> {
    check_enumeration(inst, max_supports)?;
    let n = inst.n();
    (0..=n)
        .map(|k| {
            let supports: Vec<Vec<usize>> = (0..n).combinations(k).collect();
            supports
                .into_par_iter()
                .map(|s| fit_support(inst, &s))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// `best_r[k] = min { ‖Ax − b‖_p : ‖x‖₀ ≤ k }` with its achieving supports.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualStaircase {
    #[serde(skip)]
    instance: Instance,
    /// Prefix minimum over cardinalities 0..=k.
    pub best_r: Vec<f64>,
    /// Minimum over supports of exactly k columns.
    pub exact_r: Vec<f64>,
    /// For each k, supports with |Λ| ≤ k attaining `best_r[k]`.
    pub achieving_supports: Vec<Vec<SupportFit>>,
    pub rank: usize,
    #[serde(skip)]
    fits: Vec<Vec<SupportFit>>,
}

impl ResidualStaircase {
    pub fn compute(inst: &Instance) -> Result<Self> {
        Self::compute_with_limit(inst, DEFAULT_MAX_SUPPORTS)
    }

    pub fn compute_with_limit(inst: &Instance, max_supports: u128) -> Result<Self> {
        let fits = enumerate_fits(inst, max_supports)?;
        let n = inst.n();
        let tol = REL_TOL * inst.residual_scale();

        let exact_r: Vec<f64> = fits
            .iter()
            .map(|group| group.iter().map(|f| f.residual).fold(f64::INFINITY, f64::min))
            .collect();
        let mut best_r = Vec::with_capacity(n + 1);
        for (k, &r) in exact_r.iter().enumerate() {
            let prev = if k == 0 { f64::INFINITY } else { best_r[k - 1] };
            best_r.push(if r < prev { r } else { prev });
        }
        let achieving_supports = (0..=n)
            .map(|k| {
                fits[..=k]
                    .iter()
                    .flatten()
                    .filter(|f| (f.residual - best_r[k]).abs() <= tol)
                    .cloned()
                    .collect()
            })
            .collect();
        let rank = numerical_rank(inst.a(), RANK_TOL)?;
        Ok(Self {
            instance: inst.clone(),
            best_r,
            exact_r,
            achieving_supports,
            rank,
            fits,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// All fits of exactly `k` columns, lexicographic.
    pub fn fits_of_size(&self, k: usize) -> &[SupportFit] {
        &self.fits[k]
    }

    pub fn all_fits(&self) -> impl Iterator<Item = &SupportFit> + Clone {
        self.fits.iter().flatten()
    }

    /// `σ* = min_x ‖Ax − b‖_p`
    pub fn sigma_star(&self) -> f64 {
        *self.best_r.last().expect("staircase has n+1 entries")
    }

    pub fn residual_tol(&self) -> f64 {
        REL_TOL * self.instance.residual_scale()
    }
}

/// One level `(s_i, ρ_i, Ω_i)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Level {
    pub s: usize,
    pub rho: f64,
    /// Supports of size `s` on which the penalty value `rho` is attained.
    pub supports: Vec<Vec<usize>>,
    /// One canonical minimizer per support, embedded in ℝⁿ.
    pub representatives: Vec<Vec<f64>>,
    /// Residual norm of each representative.
    pub residuals: Vec<f64>,
    /// Set when the solution set of this level is certified to be infinite;
    /// the listed representatives then do not exhaust it.
    pub omega_infinite: bool,
}

/// The level sequence for a penalty function φ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSequence {
    #[serde(rename = "L")]
    pub last: usize,
    pub levels: Vec<Level>,
    pub phi: PhiSpec,
    /// Residual norm; `None` for sequences built from raw (s, ρ) data.
    pub p: Option<Exponent>,
    pub n: usize,
    pub m: usize,
    /// Absolute tolerance used for equality of penalty values.
    pub tol: f64,
}

impl LevelSequence {
    /// Builds a sequence from bare `(s_i, ρ_i)` data, with no instance
    /// behind it. Requires s strictly decreasing to 0 and ρ strictly
    /// increasing and nonnegative.
    pub fn from_values(s: &[usize], rho: &[f64], phi: PhiSpec) -> Result<Self> {
        if s.is_empty() || s.len() != rho.len() {
            return Err(Error::InvalidInput(format!(
                "need equally many s and rho values, got {} and {}",
                s.len(),
                rho.len()
            )));
        }
        if *s.last().unwrap() != 0 {
            return Err(Error::InvalidInput("the last s value must be 0".into()));
        }
        if s.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput("s must be strictly decreasing".into()));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidInput("rho must be finite and nonnegative".into()));
        }
        if rho.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("rho must be strictly increasing".into()));
        }
        let scale = rho.last().unwrap().max(1.0);
        let levels = s
            .iter()
            .zip(rho)
            .map(|(&s, &rho)| Level {
                s,
                rho,
                supports: Vec::new(),
                representatives: Vec::new(),
                residuals: Vec::new(),
                omega_infinite: false,
            })
            .collect::<Vec<_>>();
        Ok(Self {
            last: levels.len() - 1,
            levels,
            phi,
            p: None,
            n: s[0],
            m: 0,
            tol: REL_TOL * scale,
        })
    }

    pub fn s(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.s).collect()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.rho).collect()
    }

    pub fn level(&self, i: usize) -> Result<&Level> {
        self.levels.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            max: self.last,
        })
    }

    /// Index k with ρ_k ≤ value < ρ_{k+1} (values within tolerance of a
    /// ρ_j count as equal to it). `None` when value < ρ₀ − tol; `Some(L)`
    /// when value ≥ ρ_L.
    pub fn locate(&self, value: f64) -> Option<usize> {
        if value < self.levels[0].rho - self.tol {
            return None;
        }
        let k = self
            .levels
            .iter()
            .rposition(|l| l.rho <= value + self.tol)
            .unwrap_or(0);
        Some(k)
    }

    /// Whether `value` lies within tolerance of ρ_k.
    pub fn on_level(&self, k: usize, value: f64) -> bool {
        (self.levels[k].rho - value).abs() <= self.tol
    }
}

/// The level sequence for φ, read off the staircase.
pub fn levels(st: &ResidualStaircase, phi: PhiSpec) -> Result<LevelSequence> {
    phi.validate()?;
    let inst = st.instance();
    let n = inst.n();
    let phi_r: Vec<f64> = st.best_r.iter().map(|&r| phi.value(r)).collect();
    let rho_last = phi.value(inst.b_norm());
    let tol = REL_TOL * rho_last.max(1.0);

    // sparsest budget whose best penalty value reaches `rho`
    let sparsest = |rho: f64| -> usize {
        phi_r
            .iter()
            .position(|&v| v <= rho + tol)
            .expect("phi(best_r[n]) is the global minimum")
    };

    let mut pairs = Vec::new();
    let rho0 = phi_r[n];
    let mut s = sparsest(rho0);
    pairs.push((s, rho0));
    while s > 0 {
        let rho = phi_r[s - 1];
        s = sparsest(rho);
        pairs.push((s, rho));
    }
    // the terminal level is exactly φ(‖b‖_p)
    pairs.last_mut().unwrap().1 = rho_last;

    let residual_tol = st.residual_tol();
    let mut out = Vec::with_capacity(pairs.len());
    for (i, &(s, rho)) in pairs.iter().enumerate() {
        let members: Vec<&SupportFit> = st
            .fits_of_size(s)
            .iter()
            .filter(|f| penalty_matches(&phi, f.residual, rho, tol, residual_tol))
            .collect();
        let mut level = Level {
            s,
            rho,
            supports: members.iter().map(|f| f.support.clone()).collect(),
            representatives: members.iter().map(|f| f.dense(n)).collect(),
            residuals: members.iter().map(|f| f.residual).collect(),
            omega_infinite: false,
        };
        if i + 1 < pairs.len() {
            level.omega_infinite =
                cardinality::level_infinitude_certificate(inst, &phi, &level, tol).is_some();
        }
        out.push(level);
    }

    Ok(LevelSequence {
        last: out.len() - 1,
        levels: out,
        phi,
        p: Some(inst.p()),
        n,
        m: inst.m(),
        tol,
    })
}

/// φ(r) = ρ, with the residual tolerance propagated through φ so that
/// near-ties in residual are not split by φ's slope.
fn penalty_matches(phi: &PhiSpec, r: f64, rho: f64, tol: f64, residual_tol: f64) -> bool {
    let lo = phi.value((r - residual_tol).max(0.0));
    lo <= rho + tol && phi.value(r) >= rho - tol
}

/// The canonical `(support, minimizer)` pairs of level `i`.
pub fn level_representatives(seq: &LevelSequence, i: usize) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let level = seq.level(i)?;
    Ok(level
        .supports
        .iter()
        .cloned()
        .zip(level.representatives.iter().cloned())
        .collect())
}
