//! Problem data: the matrix, the observation vector and the residual norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, sub, DenseMatrix};
use crate::phi::Exponent;

/// Default guard on the number of columns for exhaustive enumeration.
pub const DEFAULT_MAX_ENUMERATION_COLS: usize = 20;

/// Default cap on the total number of enumerated supports.
pub const DEFAULT_MAX_SUPPORTS: u128 = 2_000_000;

fn default_max_cols() -> usize {
    DEFAULT_MAX_ENUMERATION_COLS
}

/// An instance of `min ‖x‖₀ s.t. ‖Ax − b‖_p ≤ σ` and of its penalty family.
///
/// JSON: `{"A": [[...], ...], "b": [...], "p": 1|2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    a: DenseMatrix,
    b: Vec<f64>,
    p: Exponent,
    max_enumeration_cols: usize,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(rename = "A")]
    a: DenseMatrix,
    b: Vec<f64>,
    p: Exponent,
    #[serde(default = "default_max_cols", skip_serializing)]
    max_enumeration_cols: usize,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.a, raw.b, raw.p).map(|i| i.with_max_enumeration_cols(raw.max_enumeration_cols))
    }
}

impl From<Instance> for RawInstance {
    fn from(i: Instance) -> Self {
        RawInstance {
            a: i.a,
            b: i.b,
            p: i.p,
            max_enumeration_cols: i.max_enumeration_cols,
        }
    }
}

impl Instance {
    pub fn new(a: DenseMatrix, b: Vec<f64>, p: Exponent) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("b[{i}] is not finite")));
        }
        Ok(Self {
            a,
            b,
            p,
            max_enumeration_cols: DEFAULT_MAX_ENUMERATION_COLS,
        })
    }

    pub fn with_max_enumeration_cols(mut self, cap: usize) -> Self {
        self.max_enumeration_cols = cap;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidInput(format!(
                "instance JSON at line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn max_enumeration_cols(&self) -> usize {
        self.max_enumeration_cols
    }

    /// `‖v‖_p`
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.p {
            Exponent::One => norm1(v),
            Exponent::Two => norm2(v),
        }
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        sub(&self.a.mul_vec(x), &self.b)
    }

    /// `‖Ax − b‖_p`
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.norm(&self.residual(x))
    }

    /// `‖b‖_p`, the residual of the zero vector.
    pub fn b_norm(&self) -> f64 {
        self.norm(&self.b)
    }

    /// Scale used to turn relative tolerances on residuals into absolute ones.
    pub fn residual_scale(&self) -> f64 {
        self.b_norm().max(1.0)
    }
}
