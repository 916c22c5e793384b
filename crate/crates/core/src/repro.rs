//! Golden checks on the bundled fixtures: a noisy 4×5 recovery instance and
//! a synthetic level sequence with a three-way tie.

use serde::Serialize;

use crate::breakpoints::{breakpoints, marginal_f, marginal_h};
use crate::error::Result;
use crate::instance::Instance;
use crate::levels::{levels, LevelSequence, ResidualStaircase};
use crate::phi::PhiSpec;
use crate::relation::{classify, exact_penalty_threshold, verify_exactness, RelationCase};
use crate::smooth::{phi_big_eval, SmoothPenaltyProblem};

pub const RECOVERY_INSTANCE: &str = include_str!("../fixtures/recovery_4x5.json");
pub const TIED_LEVELS: &str = include_str!("../fixtures/tied_levels.json");

/// The sparse signal behind the recovery instance.
pub const RECOVERY_SIGNAL: [f64; 5] = [0.0, 1.0, 1.0, 0.0, 0.0];
/// Noise bound used with the recovery instance.
pub const RECOVERY_SIGMA: f64 = 3.6;

pub fn recovery_instance() -> Instance {
    Instance::from_json(RECOVERY_INSTANCE).expect("bundled instance parses")
}

/// Synthetic `(s, ρ, φ)` input in JSON form.
#[derive(Clone, Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelValues {
    pub s: Vec<usize>,
    pub rho: Vec<f64>,
    #[serde(default = "identity")]
    pub phi: PhiSpec,
}

fn identity() -> PhiSpec {
    PhiSpec::Identity
}

impl LevelValues {
    pub fn from_json(text: &str) -> Result<LevelSequence> {
        let v: LevelValues = serde_json::from_str(text).map_err(|e| {
            crate::Error::InvalidInput(format!(
                "levels JSON at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        v.phi.validate()?;
        LevelSequence::from_values(&v.s, &v.rho, v.phi)
    }
}

pub fn tied_levels() -> LevelSequence {
    LevelValues::from_json(TIED_LEVELS).expect("bundled levels parse")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub got: String,
    pub pass: bool,
}

fn close(name: &str, expected: f64, got: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        expected: format!("{expected:.4} ± {tol:e}"),
        got: format!("{got:.6}"),
        pass: (expected - got).abs() <= tol,
    }
}

fn equal<T: std::fmt::Debug + PartialEq>(name: &str, expected: T, got: T) -> Check {
    Check {
        name: name.into(),
        expected: format!("{expected:?}"),
        got: format!("{got:?}"),
        pass: expected == got,
    }
}

fn close_all(name: &str, expected: &[f64], got: &[f64], tol: f64) -> Check {
    let pass = expected.len() == got.len() && expected.iter().zip(got).all(|(a, b)| (a - b).abs() <= tol);
    Check {
        name: name.into(),
        expected: format!("{expected:?} ± {tol:e}"),
        got: format!("{:?}", got.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()),
        pass,
    }
}

/// Runs every golden check.
pub fn run_checks() -> Result<Vec<Check>> {
    let inst = recovery_instance();
    let st = ResidualStaircase::compute(&inst)?;
    let mut out = Vec::new();

    let id = levels(&st, PhiSpec::Identity)?;
    out.push(equal("identity levels: L", 4, id.last));
    out.push(equal("identity levels: s", vec![4, 3, 2, 1, 0], id.s()));
    out.push(close_all(
        "identity levels: rho",
        &[0.0, 1.4487, 3.3363, 4.0502, 21.2106],
        &id.rho(),
        2e-4,
    ));
    out.push(close(
        "noise of the sparse signal",
        3.5734,
        inst.residual_norm(&RECOVERY_SIGNAL),
        1e-4,
    ));

    let sq = levels(&st, PhiSpec::power(2)?)?;
    let bp = breakpoints(&sq);
    out.push(equal("least-squares breakpoints: K", 3, bp.k));
    out.push(equal("least-squares breakpoints: t", vec![0, 1, 3, 4], bp.t.clone()));
    out.push(equal(
        "least-squares breakpoints: tie sets",
        vec![vec![0], vec![1], vec![3], vec![4]],
        bp.tie_sets.clone(),
    ));
    out.push(close_all(
        "least-squares breakpoints: lambda",
        &[0.9530, 0.2796, 0.0046],
        &bp.lambda[..3],
        1e-3,
    ));
    let f = marginal_f(&sq, &bp);
    let slopes: Vec<f64> = f.pieces[1..].iter().rev().map(|p| p.slope).collect();
    out.push(close_all(
        "least-squares F slopes",
        &[224.9447, 8.2021, 1.0494],
        &slopes,
        2e-3,
    ));

    for (sigma, h) in [(1.0, 4), (2.0, 3), (3.6, 2), (10.0, 1), (22.0, 0)] {
        out.push(equal(&format!("H({sigma})"), h, marginal_h(&id, sigma)?));
    }

    let rel = classify(&sq, &bp, RECOVERY_SIGMA)?;
    out.push(equal("classification at sigma = 3.6", RelationCase::Never, rel.case));

    let hinge = PhiSpec::squared_hinge(RECOVERY_SIGMA)?;
    let t = exact_penalty_threshold(&st, hinge, RECOVERY_SIGMA)?;
    out.push(equal("squared-hinge levels: s", vec![2, 1, 0], t.levels.s()));
    out.push(close("squared-hinge levels: rho_1", 0.1013, t.levels.rho()[1], 5e-4));
    out.push(close("squared-hinge levels: rho_2", 155.0666, t.levels.rho()[2], 5e-2));
    out.push(close("exact penalty threshold", 9.8678, t.lambda_star, 2e-3 * 9.8678));
    let v = verify_exactness(&st, hinge, RECOVERY_SIGMA, &[10.0, 20.0, 100.0])?;
    out.push(equal("exactness at lambda = 10, 20, 100", true, v.all_pass_above_threshold));

    let prob = SmoothPenaltyProblem::new(inst.clone(), RECOVERY_SIGMA, 1.0)?;
    out.push(close("smooth penalty at the sparse signal", 0.0, phi_big_eval(&prob, &RECOVERY_SIGNAL)?, 0.0));

    let tied = tied_levels();
    let tb = breakpoints(&tied);
    out.push(equal("tied levels: K", 2, tb.k));
    out.push(equal("tied levels: t", vec![0, 2, 4], tb.t.clone()));
    out.push(equal(
        "tied levels: tie sets",
        vec![vec![0], vec![1, 2], vec![4]],
        tb.tie_sets.clone(),
    ));
    out.push(close_all("tied levels: lambda", &[4.0, 2.0], &tb.lambda[..2], 1e-12));
    Ok(out)
}
