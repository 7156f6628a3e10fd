//! Simulation laboratory for random walks on proximity graphs built over
//! spatial point processes.
//!
//! The pipeline goes: sample a point process in a finite window
//! ([`point_process`]), build the Delaunay triangulation, Gabriel graph or
//! Voronoi skeleton over it ([`geometry`]), attach edge conductances and
//! solve for effective resistances ([`network`]), simulate the associated
//! random walk ([`walk`]), and evaluate the recurrence / transience
//! machinery: annulus cut statistics, envelope events, good-box fields,
//! inter-box paths and rough-embedding constants ([`criteria`],
//! [`paths_chains`]).

// Comparisons spelled `!(x > 0.0)` reject NaN along with the sign; indexed
// loops run over dim-strided buffers where iterators obscure the stride.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod criteria;
pub mod error;
pub mod geometry;
pub mod io;
pub mod network;
pub mod paths_chains;
pub mod point_process;
pub mod rng;
pub mod walk;

pub(crate) mod grid;

pub use error::{Error, Result};

/// Version string stamped into result records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
