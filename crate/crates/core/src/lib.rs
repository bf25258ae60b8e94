//! Finite-element sampling of Gaussian random fields whose smoothness varies in space.
//!
//! The pipeline is: a [`smoothness::SmoothnessProfile`] defines s(x); a
//! [`kernel::KernelContext`] evaluates the nonlocal kernel; [`mesh::Mesh1D`] and
//! [`assembly`] build the dense stiffness and mass matrices; [`sampler`] draws
//! fields and covariances; [`convergence`] estimates strong error rates.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod sampler;
pub mod smoothness;

pub use error::{Error, Result};
