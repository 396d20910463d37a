//! Generalized qualification of spectral regularization methods.
//!
//! The crate evaluates filter families `g_alpha`, estimates the source
//! function `s_rho` attached to a rate `rho`, classifies qualification into
//! weak, strong and optimal levels, and runs convergence experiments on
//! finite spectral models.

pub mod error;
pub mod experiments;
pub mod filters;
pub mod funcdsl;
pub mod numerics;
pub mod operators;
pub mod qualification;

pub use error::{Error, Result};
pub use filters::{FilterFamily, ResidualValue};
pub use funcdsl::{parse_expr, FuncExpr, OrderFn, SourceFn};
