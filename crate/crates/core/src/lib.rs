//! Boundary-layer energies of the Cahn-Hilliard functional with Dirichlet
//! data: potentials, recovery profiles, one-dimensional minimizers, planar
//! tubular coordinates, and the ε-ladder harness that measures second-order
//! coefficients.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field2d;
pub mod fit;
pub mod geodesic;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod minimizer1d;
pub mod ode;
pub mod potential;
pub mod profile;
pub mod quadrature;
pub mod structural;

pub use error::{Error, Result};
