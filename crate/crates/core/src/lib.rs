//! Differential-geometric invariants of time-reversal symmetric Hamiltonian families
//! over discretized involutive manifolds.
//!
//! The pipeline runs spectral → symmetry → berry → curvature / holonomy → classify.
//! [`bundle::DiscreteBundle`] bundles the first steps for callers that just want
//! link variables and sewing matrices for a model.

pub mod berry;
pub mod bundle;
pub mod classify;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod holonomy;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, ErrorKind, Result};
pub use lattice::{InvolutionKind, InvolutiveLattice, LoopPath, Topology};
