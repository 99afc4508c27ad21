//! Slender-body Dirichlet-to-Neumann and Neumann-to-Dirichlet maps for the
//! Laplace equation outside a thin closed filament.
//!
//! The straight periodic cylinder is handled exactly through its Fourier
//! symbols ([`spectral`]); the curved filament is discretized on a uniform
//! `(s, θ)` grid ([`grid`]) and the layer potentials are assembled as the
//! straight operator plus a quadrature remainder ([`operators`]).

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod kernels;
pub mod operators;
pub mod solver;
pub mod specfun;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
