//! Graphon games: equilibria of network games on graphs sampled from a
//! graphon, their infinite-population limits, targeted interventions and
//! the experiments comparing the two.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod grid;
pub mod spectral;
pub mod sampling;
pub mod equilibrium;
pub mod interventions;
pub mod bayes;
pub mod experiments;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{GraphonError, Result};
pub use grid::{l2_distance, step_function_embed, GridFunction};
pub use kernels::{GraphonKind, GraphonSpec};
