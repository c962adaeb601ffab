//! Epsilon-strong simulation of convex minorants of stable meanders and
//! weakly stable Levy processes.
//!
//! The building blocks are layered bottom-up:
//!
//! * [`stable`], [`special`], [`tuning`]: laws, closed-form moments and constants;
//! * [`geometry`]: piecewise linear convex functions and sandwiches;
//! * [`chain`]: the stick-breaking face stream of a meander;
//! * [`dominator`]: backward dominating process giving certified tail bounds;
//! * [`epsss`]: the simulation sessions (meander, Levy minorant, meander marginals);
//! * [`estimators`]: exact indicators, unbiased estimators and bootstrap intervals;
//! * [`stats`]: goodness-of-fit tests and resampling;
//! * [`experiments`]: runtime tails, timing and sample tables.

pub mod chain;
pub mod dominator;
pub mod epsss;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stable;
pub mod stats;
pub mod tuning;

pub use error::{Error, Result};
pub use params::StableParams;
pub use rng::RngStream;
pub use tuning::{compute_tuning, solve_cramer_root, Tuning};
