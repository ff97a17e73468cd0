//! Sample-complexity bounds and recovery experiments for one-dimensional
//! total-variation minimization under Gaussian measurements.
//!
//! * [`diffop`]: the difference operator, gradient-sparse signals, support counts.
//! * [`bounds`]: closed-form measurement bounds and their quadratic surrogates.
//! * [`statdim`]: Monte Carlo estimation of the expected squared distance to the
//!   scaled TV subdifferential, and the sign-correlation check.
//! * [`solver`]: TV minimization subject to linear measurements.
//! * [`phase`]: seeded phase-transition experiments.

pub mod bounds;
pub mod boxqp;
pub mod diffop;
pub mod error;
pub mod format;
pub mod phase;
pub mod seed;
pub mod solver;
pub mod statdim;

pub use error::{Error, Result};
