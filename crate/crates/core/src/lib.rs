//! Monte Carlo simulation of lattice gauge theories with Wilson action.
//!
//! Supported gauge groups are Z2, U(1), SU(2) and SU(3) on hypercubic
//! lattices of dimension 2 to 4 with periodic or open boundaries.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod error;
pub mod experiment;
pub mod group;
pub mod lattice;
pub mod observables;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use action::{ActionValue, Configuration};
pub use error::{Error, Result};
pub use group::{AlgebraElement, CMatrix, GroupElement, GroupId};
pub use lattice::{Boundary, Geometry, LatticeShape, LinkIndex, PlaquetteIndex, Site};
pub use rng::RandomStream;
pub use sampler::{Algorithm, Sampler, SamplerParams};
