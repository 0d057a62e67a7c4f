//! Numerical laboratory for Orlicz function spaces on [0,1], Orlicz sequence
//! spaces, and the subspaces spanned by independent mean-zero copies of a
//! single function.
//!
//! The crate is organised bottom-up:
//!
//! * [`orlicz_core`]: Orlicz functions as values (evaluation, inverse, Young
//!   conjugate, regularization, doubling constants, p-convexity).
//! * [`measure_ops`]: sampled functions, distribution functions,
//!   rearrangements, dilations and the disjoint sum of copies.
//! * [`norms`]: Luxemburg and sequence norms, the L² tail term and
//!   fundamental functions.
//! * [`indices`]: Matuszewska–Orlicz indices at zero and at infinity.
//! * [`span_builder`]: the sequence function ψ generated by `f` and the
//!   two-sided norm equivalences it satisfies.
//! * [`mc_sim`]: Monte Carlo simulation of independent symmetric copies.
//! * [`criteria`]: strong-embedding and equicontinuity criteria.

pub mod criteria;
pub mod error;
pub mod indices;
pub mod mc_sim;
pub mod measure_ops;
pub mod norms;
pub mod orlicz_core;
pub mod presets;
pub mod quad;
pub mod span_builder;

pub use error::{LabError, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
