//! Numerical laboratory for extremal Sobolev functions.
//!
//! Computes sharp Sobolev constants C_p(D) and their extremals on balls
//! (by shooting) and on planar domains (by a normalized gradient flow), and
//! checks the reverse-Hölder inequality relating ∫φ^{p-1} to ∫φ^p together
//! with the level-set identities and inequalities it is assembled from.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod lambda_star;
pub mod levels;
mod ode;
pub mod radial;
pub mod report;

pub use error::{Error, Result};
pub use geometry::{unit_ball_volume, validate_exponents, volume_radius, Domain, Exponents, Shape};
