//! Numeric infrastructure: adaptive quadrature and special functions.

mod quad;
mod special;

pub use quad::{integrate, integrate_semi_infinite, Quadrature, DEFAULT_MAX_INTERVALS};
pub use special::{beta, gamma, ln_beta, ln_gamma};
