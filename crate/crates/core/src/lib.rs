//! Random-walk cover times on finite graphs.
//!
//! The crate computes exact hitting, commute and difference times,
//! effective resistances and expected cover times; estimates cover times by
//! reproducible Monte Carlo; evaluates the genus-dependent cover-time bounds;
//! and provides the geometric tools behind the lower bound: Euclidean circle
//! packings of triangulated tori, Dirichlet resistance certificates and
//! separated-subset extraction.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod corpus;
pub mod error;
pub mod exact;
pub mod graph;
mod linalg;
pub mod mc;
pub mod packing;
pub mod proof_lab;
pub mod surface;

pub use error::{Error, Result};
pub use graph::{Graph, VertexFunction};
pub use surface::{CoveringLedger, Triangulation};
