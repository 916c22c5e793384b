//! Finiteness of optimal solution sets.
//!
//! Level sets Ω_k are encoded by supports plus one canonical point each. This
//! module decides, where possible, whether Ω_k (and the penalty and
//! constrained optimal sets built from levels) is finite, and backs every
//! "infinite" verdict with a constructed second optimal point.
//!
//! Two constructions are used:
//! * slack: a point whose residual lies strictly below the zero threshold of
//!   a plateau penalty (or below σ for the constrained problem) can be moved
//!   along one coordinate of its support without leaving the optimal set;
//! * sign-preserving direction (p = 1): when a point on a support of size
//!   s ≥ 2 has at least m + 2 − s nonzero residuals, the directions that keep
//!   zero residuals at zero and leave the signed residual sum unchanged form
//!   a nontrivial subspace, and a short step along it keeps the l1 residual.

use rayon::prelude::*;
use serde::Serialize;

use crate::breakpoints::{active_levels, BreakpointSequence};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::levels::{binomial, Level, LevelSequence};
use crate::linalg::{l1_optimal_vertices, norm2, null_vector, DenseMatrix};
use crate::phi::{Exponent, PhiSpec};

/// Largest row count accepted by [`check_h2`].
pub const MAX_H2_ROWS: usize = 25;

/// Tri-state verdict on the size of a solution set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    Finite,
    Infinite,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// Residual strictly below the zero threshold of the penalty.
    Slack,
    /// Step along a direction preserving residual signs and zero residuals.
    SignPreserving,
}

/// Two distinct optimal points with the same support and objective.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfinitudeCertificate {
    pub kind: CertificateKind,
    pub support: Vec<usize>,
    pub base: Vec<f64>,
    pub second: Vec<f64>,
    pub base_residual: f64,
    pub second_residual: f64,
}

impl InfinitudeCertificate {
    /// Re-checks the certificate against the instance: same support, penalty
    /// values equal within `1e-9`, residual bound respected, distinct points.
    pub fn verify(&self, inst: &Instance, phi: &PhiSpec, ceiling: Option<f64>) -> bool {
        let n = inst.n();
        let support_of = |x: &[f64]| -> Vec<usize> { (0..n).filter(|&j| x[j] != 0.0).collect() };
        let rb = inst.residual_norm(&self.base);
        let rs = inst.residual_norm(&self.second);
        let (vb, vs) = (phi.value(rb), phi.value(rs));
        let same_value = (vb - vs).abs() <= 1e-9 * vb.abs().max(1.0);
        let within = ceiling.is_none_or(|c| rs <= c + 1e-9 * inst.residual_scale());
        let gap = norm2(&crate::linalg::sub(&self.base, &self.second));
        support_of(&self.base) == self.support
            && support_of(&self.second) == self.support
            && same_value
            && within
            && gap > 1e-12
    }
}

/// Cardinality verdict for a level, a constrained optimal set or a penalty
/// optimal set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CardinalityReport {
    pub level_index: Option<usize>,
    pub active_levels: Vec<usize>,
    pub finite: Finiteness,
    pub upper_bound: Option<u128>,
    /// Number of canonical points listed for the set.
    pub witnesses: usize,
    pub strict_minimizers: Option<bool>,
    pub h2_status: Option<Vec<bool>>,
    pub certificate: Option<InfinitudeCertificate>,
}

impl CardinalityReport {
    fn for_level(k: usize, witnesses: usize) -> Self {
        Self {
            level_index: Some(k),
            active_levels: vec![k],
            finite: Finiteness::Unknown,
            upper_bound: None,
            witnesses,
            strict_minimizers: None,
            h2_status: None,
            certificate: None,
        }
    }

    fn set_finite(&mut self, bound: u128) {
        self.finite = Finiteness::Finite;
        self.upper_bound = Some(bound);
        self.strict_minimizers = Some(true);
    }

    fn set_infinite(&mut self, cert: InfinitudeCertificate) {
        self.finite = Finiteness::Infinite;
        self.strict_minimizers = Some(false);
        self.certificate = Some(cert);
    }
}

fn zero_tol(inst: &Instance) -> f64 {
    1e-9 * inst.residual_scale()
}

fn support_of(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&j| x[j] != 0.0).collect()
}

/// Moves `x` along its first support coordinate, keeping the residual at
/// most `ceiling`.
pub fn slack_certificate(inst: &Instance, x: &[f64], ceiling: f64) -> Option<InfinitudeCertificate> {
    let support = support_of(x);
    let &j = support.first()?;
    let r = inst.residual_norm(x);
    let slack = ceiling - r;
    if slack <= zero_tol(inst) {
        return None;
    }
    let col_norm = inst.norm(&inst.a().column(j));
    let mut step = 0.5 * x[j].abs();
    if col_norm > 0.0 {
        step = step.min(0.5 * slack / col_norm);
    }
    let mut second = x.to_vec();
    second[j] += step;
    let second_residual = inst.residual_norm(&second);
    if second_residual > ceiling || second == x {
        return None;
    }
    Some(InfinitudeCertificate {
        kind: CertificateKind::Slack,
        support,
        base: x.to_vec(),
        second,
        base_residual: r,
        second_residual,
    })
}

/// Number of residual components of `x` that are nonzero beyond the
/// counting tolerance.
pub fn nonzero_residuals(inst: &Instance, x: &[f64]) -> usize {
    let tol = zero_tol(inst);
    inst.residual(x).iter().filter(|r| r.abs() > tol).count()
}

/// The p = 1 construction: requires |supp x| ≥ 2 and at least
/// m + 2 − |supp x| nonzero residuals at `x`.
pub fn sign_preserving_certificate(inst: &Instance, x: &[f64]) -> Option<InfinitudeCertificate> {
    let support = support_of(x);
    let s = support.len();
    let m = inst.m();
    if s < 2 {
        return None;
    }
    let tol = zero_tol(inst);
    let r = inst.residual(x);
    let nonzero: Vec<usize> = (0..m).filter(|&i| r[i].abs() > tol).collect();
    if nonzero.len() + s < m + 2 {
        return None;
    }
    let a_s = inst.a().select_columns(&support)?;
    let mut rows = vec![vec![0.0; s]];
    for &i in &nonzero {
        let sign = r[i].signum();
        for (c, v) in rows[0].iter_mut().enumerate() {
            *v += sign * a_s[(i, c)];
        }
    }
    for i in (0..m).filter(|i| !nonzero.contains(i)) {
        rows.push(a_s.row(i).to_vec());
    }
    let c = DenseMatrix::from_rows(&rows).ok()?;
    let d = null_vector(&c)?;

    let ad = a_s.mul_vec(&d);
    let mut step: f64 = 1.0;
    for &i in &nonzero {
        if ad[i] != 0.0 {
            step = step.min(r[i].abs() / ad[i].abs());
        }
    }
    for (k, &j) in support.iter().enumerate() {
        if d[k] != 0.0 {
            step = step.min(x[j].abs() / d[k].abs());
        }
    }
    step *= 0.5;
    let mut second = x.to_vec();
    for (k, &j) in support.iter().enumerate() {
        second[j] += step * d[k];
    }
    let base_residual = inst.residual_norm(x);
    let second_residual = inst.residual_norm(&second);
    if (second_residual - base_residual).abs() > tol || support_of(&second) != support {
        return None;
    }
    Some(InfinitudeCertificate {
        kind: CertificateKind::SignPreserving,
        support,
        base: x.to_vec(),
        second,
        base_residual,
        second_residual,
    })
}

/// Points of a p = 1 level at which the nonzero-residual count is checked:
/// each canonical vertex and, per support, the barycenter of its optimal
/// vertices (a relative-interior point of the optimal face, where the count
/// is largest).
fn l1_candidates(inst: &Instance, level: &Level) -> Vec<Vec<f64>> {
    let n = inst.n();
    let mut out = Vec::new();
    for (support, rep) in level.supports.iter().zip(&level.representatives) {
        out.push(rep.clone());
        let Some(sub) = inst.a().select_columns(support) else {
            continue;
        };
        let Ok(vertices) = l1_optimal_vertices(&sub, inst.b()) else {
            continue;
        };
        if vertices.len() < 2 {
            continue;
        }
        let mut center = vec![0.0; n];
        for v in &vertices {
            for (k, &j) in support.iter().enumerate() {
                center[j] += v[k] / vertices.len() as f64;
            }
        }
        if support_of(&center) == *support {
            out.push(center);
        }
    }
    out
}

/// Constructs a certificate that level `level` has infinitely many points,
/// if one of the two constructions applies.
pub fn level_infinitude_certificate(
    inst: &Instance,
    phi: &PhiSpec,
    level: &Level,
    level_tol: f64,
) -> Option<InfinitudeCertificate> {
    if level.s == 0 {
        return None;
    }
    if !phi.level_set_is_singleton_tol(level.rho, level_tol) {
        let ceiling = phi.properties().zero_threshold;
        for x in &level.representatives {
            if let Some(c) = slack_certificate(inst, x, ceiling) {
                return Some(c);
            }
        }
    }
    if inst.p() == Exponent::One && level.s >= 2 {
        for x in l1_candidates(inst, level) {
            if let Some(c) = sign_preserving_certificate(inst, &x) {
                return Some(c);
            }
        }
    }
    None
}

/// Whether every signed sum Σ zᵢaᵢ with zᵢ = ±1 is nonzero.
pub fn check_h2(column: &[f64]) -> Result<bool> {
    let m = column.len();
    if m > MAX_H2_ROWS {
        return Err(Error::ResourceLimit {
            what: format!("sign patterns 2^{m}"),
            count: 1u128 << m,
            limit: 1u128 << MAX_H2_ROWS,
        });
    }
    if m == 0 {
        return Ok(false);
    }
    // z and −z give sums of opposite sign, so fix z₀ = +1
    let (first, rest) = column.split_first().unwrap();
    Ok((0u64..1u64 << (m - 1)).into_par_iter().all(|mask| {
        let sum = rest.iter().enumerate().fold(*first, |acc, (i, &a)| {
            if mask >> i & 1 == 1 {
                acc - a
            } else {
                acc + a
            }
        });
        sum.abs() > 1e-12
    }))
}

fn check_level(seq: &LevelSequence, k: usize) -> Result<&Level> {
    seq.level(k)
}

/// Bound for p = 2 levels whose penalty level set is a single point.
pub fn p2_bound(seq: &LevelSequence, k: usize) -> Result<CardinalityReport> {
    let level = check_level(seq, k)?;
    let mut report = CardinalityReport::for_level(k, level.supports.len());
    if seq.p == Some(Exponent::Two) && seq.phi.level_set_is_singleton_tol(level.rho, seq.tol) {
        report.set_finite(binomial(seq.n, level.s));
    }
    Ok(report)
}

/// Verdict for a p = 1 level.
pub fn p1_report(inst: &Instance, seq: &LevelSequence, k: usize) -> Result<CardinalityReport> {
    if inst.p() != Exponent::One || seq.p != Some(Exponent::One) {
        return Err(Error::Precondition("the l1 cardinality report needs p = 1".into()));
    }
    let level = check_level(seq, k)?;
    let mut report = CardinalityReport::for_level(k, level.supports.len());
    if k == seq.last {
        report.set_finite(1);
        return Ok(report);
    }
    if k + 1 == seq.last && level.s == 1 {
        let h2 = if inst.m() <= MAX_H2_ROWS {
            let cols: Vec<bool> = (0..inst.n())
                .map(|j| check_h2(&inst.a().column(j)))
                .collect::<Result<_>>()?;
            Some(cols)
        } else {
            None
        };
        let all_h2 = h2.as_ref().is_some_and(|v| v.iter().all(|&b| b));
        report.h2_status = h2;
        if all_h2 && seq.phi.level_set_is_singleton_tol(level.rho, seq.tol) {
            report.set_finite(inst.n() as u128 * (1u128 << inst.m()));
            return Ok(report);
        }
    }
    if let Some(cert) = level_infinitude_certificate(inst, &seq.phi, level, seq.tol) {
        report.set_infinite(cert);
    }
    Ok(report)
}

/// Level verdict dispatched on the residual norm.
pub fn level_report(inst: &Instance, seq: &LevelSequence, k: usize) -> Result<CardinalityReport> {
    match inst.p() {
        Exponent::One => p1_report(inst, seq, k),
        Exponent::Two => {
            let mut report = p2_bound(seq, k)?;
            if report.finite == Finiteness::Unknown {
                if let Some(cert) = level_infinitude_certificate(inst, &seq.phi, &seq.levels[k], seq.tol) {
                    report.set_infinite(cert);
                }
            }
            Ok(report)
        }
    }
}

/// Output of [`strictness_p2`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrictnessReport {
    pub sigma: f64,
    pub k: usize,
    pub sigma_on_grid: bool,
    pub all_strict: bool,
    pub finite: bool,
    /// Whether every listed point of the constrained optimal set has
    /// residual exactly σ.
    pub residual_equals_sigma: bool,
    /// A second optimal point next to a representative when the set is
    /// infinite.
    pub certificate: Option<InfinitudeCertificate>,
}

/// For p = 2 and the identity penalty: σ lies on a level ⇔ the constrained
/// optimal set is finite ⇔ all its points are strict minimizers.
pub fn strictness_p2(inst: &Instance, seq: &LevelSequence, sigma: f64) -> Result<StrictnessReport> {
    if inst.p() != Exponent::Two || seq.p != Some(Exponent::Two) || !seq.phi.is_identity() {
        return Err(Error::Precondition(
            "the strictness test needs p = 2 and levels under the identity penalty".into(),
        ));
    }
    if !sigma.is_finite() {
        return Err(Error::InvalidInput(format!("sigma must be finite, got {sigma}")));
    }
    let k = seq.locate(sigma).ok_or(Error::Infeasible {
        sigma,
        sigma_star: seq.levels[0].rho,
    })?;
    if k == seq.last {
        return Ok(StrictnessReport {
            sigma,
            k,
            sigma_on_grid: true,
            all_strict: true,
            finite: true,
            residual_equals_sigma: sigma <= seq.levels[k].rho + seq.tol,
            certificate: None,
        });
    }
    let on_grid = seq.on_level(k, sigma);
    let level = &seq.levels[k];
    let residual_equals_sigma = level.residuals.iter().all(|r| (r - sigma).abs() <= seq.tol);
    let certificate = if on_grid {
        None
    } else {
        level
            .representatives
            .iter()
            .find_map(|x| slack_certificate(inst, x, sigma))
    };
    Ok(StrictnessReport {
        sigma,
        k,
        sigma_on_grid: on_grid,
        all_strict: on_grid,
        finite: on_grid,
        residual_equals_sigma,
        certificate,
    })
}

/// Verdict for the penalty optimal set at λ, combining the verdicts of the
/// active levels.
pub fn penalty_cardinality(
    inst: &Instance,
    seq: &LevelSequence,
    bp: &BreakpointSequence,
    lambda: f64,
) -> Result<CardinalityReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let active = active_levels(bp, lambda);
    let mut combined = CardinalityReport {
        level_index: None,
        active_levels: active.clone(),
        finite: Finiteness::Finite,
        upper_bound: Some(0),
        witnesses: 0,
        strict_minimizers: Some(true),
        h2_status: None,
        certificate: None,
    };
    for &k in &active {
        let r = level_report(inst, seq, k)?;
        combined.witnesses += r.witnesses;
        if r.h2_status.is_some() {
            combined.h2_status = r.h2_status.clone();
        }
        match r.finite {
            Finiteness::Infinite => {
                combined.finite = Finiteness::Infinite;
                combined.upper_bound = None;
                combined.strict_minimizers = Some(false);
                if combined.certificate.is_none() {
                    combined.certificate = r.certificate;
                }
            }
            Finiteness::Unknown if combined.finite == Finiteness::Finite => {
                combined.finite = Finiteness::Unknown;
                combined.upper_bound = None;
                combined.strict_minimizers = None;
            }
            Finiteness::Finite if combined.finite == Finiteness::Finite => {
                combined.upper_bound = Some(combined.upper_bound.unwrap() + r.upper_bound.unwrap());
            }
            _ => {}
        }
    }
    if active.len() == 1 {
        combined.level_index = Some(active[0]);
    }
    Ok(combined)
}
