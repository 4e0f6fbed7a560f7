//! Alternating projections between closed, possibly nonconvex sets.
//!
//! The crate provides a catalog of projectable sets, drivers for plain,
//! local, Douglas-Rachford and averaged projections, diagnostics for
//! regularity conditions and convergence rates, and applications to phase
//! retrieval, Gaussian EM and Cadzow low-rank approximation.

pub mod apps;
pub mod cli;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod phase;
pub mod primitives;
pub mod sets;

pub use error::{Error, Result};
pub use primitives::{distance, select, Matrix, Point, ProjectionResult, TieMode, TiePolicy, Tolerances};
pub use sets::SetDescriptor;
