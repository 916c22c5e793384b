//! Penalty functions applied to the residual norm.
//!
//! Every member of the family is continuous, nondecreasing and vanishes at the
//! origin. The family is closed so that the properties the analyzers depend on
//! (strict monotonicity, the zero plateau, level-set cardinality) can be
//! answered exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of the power variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Exponent {
    One,
    Two,
}

impl Exponent {
    pub fn as_u8(self) -> u8 {
        match self {
            Exponent::One => 1,
            Exponent::Two => 2,
        }
    }

    fn pow(self, z: f64) -> f64 {
        match self {
            Exponent::One => z,
            Exponent::Two => z * z,
        }
    }
}

impl TryFrom<u8> for Exponent {
    type Error = String;

    fn try_from(p: u8) -> std::result::Result<Self, String> {
        match p {
            1 => Ok(Exponent::One),
            2 => Ok(Exponent::Two),
            other => Err(format!("exponent must be 1 or 2, got {other}")),
        }
    }
}

impl From<Exponent> for u8 {
    fn from(p: Exponent) -> u8 {
        p.as_u8()
    }
}

/// A penalty function φ: ℝ₊ → ℝ₊.
///
/// JSON form: `{"variant": "identity"|"power"|"shifted_power"|"squared_hinge", "p": 1|2, "sigma": x}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PhiSpec {
    /// φ(z) = z
    Identity,
    /// φ(z) = zᵖ / p
    Power { p: Exponent },
    /// φ(z) = (zᵖ − σᵖ)₊
    ShiftedPower { sigma: f64, p: Exponent },
    /// φ(z) = ½ (z − σ)₊²
    SquaredHinge { sigma: f64 },
}

/// Analytic facts about a [`PhiSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiProperties {
    pub strictly_increasing: bool,
    /// sup { z : φ(z) = 0 }
    pub zero_threshold: f64,
}

impl PhiProperties {
    /// Whether φ vanishes exactly on [0, σ] and is positive beyond it.
    pub fn exact_for(&self, sigma: f64) -> bool {
        sigma >= 0.0 && self.zero_threshold == sigma
    }
}

impl PhiSpec {
    pub fn power(p: u8) -> Result<Self> {
        Ok(PhiSpec::Power {
            p: Exponent::try_from(p).map_err(Error::InvalidInput)?,
        })
    }

    pub fn shifted_power(sigma: f64, p: u8) -> Result<Self> {
        let spec = PhiSpec::ShiftedPower {
            sigma,
            p: Exponent::try_from(p).map_err(Error::InvalidInput)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn squared_hinge(sigma: f64) -> Result<Self> {
        let spec = PhiSpec::SquaredHinge { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhiSpec::ShiftedPower { sigma, .. } | PhiSpec::SquaredHinge { sigma } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "phi shift sigma must be finite and nonnegative, got {sigma}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// φ(z), unchecked. Callers must pass z ≥ 0.
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            PhiSpec::Identity => z,
            PhiSpec::Power { p } => p.pow(z) / p.as_u8() as f64,
            PhiSpec::ShiftedPower { sigma, p } => (p.pow(z) - p.pow(sigma)).max(0.0),
            PhiSpec::SquaredHinge { sigma } => {
                let t = (z - sigma).max(0.0);
                0.5 * t * t
            }
        }
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if z.is_nan() || z < 0.0 {
            return Err(Error::InvalidInput(format!(
                "phi is defined on z >= 0, got {z}"
            )));
        }
        Ok(self.value(z))
    }

    pub fn properties(&self) -> PhiProperties {
        match *self {
            PhiSpec::Identity | PhiSpec::Power { .. } => PhiProperties {
                strictly_increasing: true,
                zero_threshold: 0.0,
            },
            PhiSpec::ShiftedPower { sigma, .. } | PhiSpec::SquaredHinge { sigma } => {
                PhiProperties {
                    strictly_increasing: sigma == 0.0,
                    zero_threshold: sigma,
                }
            }
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.properties().strictly_increasing
    }

    /// Whether the level set {z ≥ 0 : φ(z) = ρ} is a single point. Only the
    /// zero level of a shifted variant with σ > 0 is an interval.
    pub fn level_set_is_singleton(&self, rho: f64) -> bool {
        let props = self.properties();
        props.strictly_increasing || rho > 0.0 || props.zero_threshold == 0.0
    }

    /// Tolerance-aware variant of [`Self::level_set_is_singleton`]: a level
    /// within `tol` of zero counts as the zero level.
    pub fn level_set_is_singleton_tol(&self, rho: f64, tol: f64) -> bool {
        let rho = if rho.abs() <= tol { 0.0 } else { rho };
        self.level_set_is_singleton(rho)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, PhiSpec::Identity)
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PhiSpec::Identity => write!(f, "identity"),
            PhiSpec::Power { p } => write!(f, "power:{}", p.as_u8()),
            PhiSpec::ShiftedPower { sigma, p } => {
                write!(f, "shifted_power:{}:{}", sigma, p.as_u8())
            }
            PhiSpec::SquaredHinge { sigma } => write!(f, "squared_hinge:{sigma}"),
        }
    }
}

/// Parses either the JSON form or the compact `name[:arg...]` form used on
/// the command line: `identity`, `power:2`, `shifted_power:SIGMA:P`,
/// `squared_hinge:SIGMA`.
impl FromStr for PhiSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: PhiSpec = serde_json::from_str(s)
                .map_err(|e| Error::InvalidInput(format!("phi JSON: {e}")))?;
            spec.validate()?;
            return Ok(spec);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("phi '{s}' is missing argument {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("phi '{s}': {e}")))
        };
        let exponent = |i: usize| -> Result<u8> {
            let v = num(i)?;
            if v == 1.0 || v == 2.0 {
                Ok(v as u8)
            } else {
                Err(Error::InvalidInput(format!("phi '{s}': exponent must be 1 or 2")))
            }
        };
        let spec = match (parts[0], parts.len()) {
            ("identity", 1) => PhiSpec::Identity,
            ("power", 2) => PhiSpec::power(exponent(1)?)?,
            ("shifted_power", 3) => PhiSpec::shifted_power(num(1)?, exponent(2)?)?,
            ("squared_hinge", 2) => PhiSpec::squared_hinge(num(1)?)?,
            _ => return Err(Error::InvalidInput(format!("unrecognized phi '{s}'"))),
        };
        Ok(spec)
    }
}
