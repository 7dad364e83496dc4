//! Simulation and numerical verification engine for exponential-family
//! facet point processes: Gibbs processes of interacting segments (plane)
//! and plates (higher dimensions) whose density is `exp(nu . G(x))` with
//! respect to a Poisson facet process, `G = (G_1, .., G_d)` being the total
//! measures of `j`-fold facet intersections.

// Negated float comparisons are deliberate (they reject NaN), and index
// loops mirror the coordinate formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod correlation;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod moments;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod ustat;

pub use error::{Error, Result};
