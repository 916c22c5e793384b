//! Exact analysis of sparse regression `min ‖x‖₀ s.t. ‖Ax − b‖_p ≤ σ` and of
//! its penalty family `min ‖x‖₀ + λφ(‖Ax − b‖_p)` on small dense instances,
//! by exhaustive enumeration of supports.

pub mod breakpoints;
pub mod cli;
pub mod cardinality;
pub mod error;
pub mod format;
pub mod instance;
pub mod levels;
pub mod linalg;
pub mod phi;
pub mod relation;
pub mod repro;
pub mod smooth;

pub use error::{Error, Result};
pub use instance::Instance;
pub use phi::{Exponent, PhiSpec};
