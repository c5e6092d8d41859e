//! Network cluster-robust inference toolkit.
//!
//! Diagnose whether a graph contains low-conductance clusters from its
//! normalized Laplacian spectrum, build them with spectral clustering,
//! score them by conductance, and run cluster-level randomization tests
//! alongside network HAC and i.i.d. t-tests. A seeded Monte Carlo harness
//! drives random graph models through the whole pipeline.

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod graphgen;
pub mod inference;
pub mod io;
mod linalg;
pub mod partition;
pub mod rng;
pub mod sim;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use graph::{ComponentLabeling, Distance, Graph};
pub use partition::Partition;
