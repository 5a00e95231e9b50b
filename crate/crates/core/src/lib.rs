//! Waiting times for the first `r`-fold collision or repetition when sampling
//! the domain of a finite function with a fixed preimage configuration.
//!
//! Three processes are covered: drawing without replacement (`K1`), drawing
//! with replacement and waiting for `r` distinct preimages of one image (`K2`),
//! and drawing with replacement waiting for the `r`-th hit of one image (`R`).

pub mod asymptotics;
pub mod battery;
pub mod config;
pub mod error;
pub mod exact_dist;
pub mod expectations;
pub mod kernels;
pub mod measures;
pub mod montecarlo;
pub mod numeric;
pub mod report;

pub use config::{parse_rational, CollisionOrder, Configuration, Mode, MultinomialModel};
pub use error::{Error, Result};
pub use exact_dist::{ExactPolicy, Scalar, SurvivalTable};
pub use measures::BalanceReport;
pub use montecarlo::SimulationReport;
