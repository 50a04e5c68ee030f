//! Core library for 2D frequency-domain acoustic cloak design.
//!
//! Solves the inhomogeneous Helmholtz scattering problem around a rigid
//! obstacle with quadratic (P2) triangular finite elements and finds
//! cell-wise isotropic material distributions (density, bulk modulus)
//! that minimize the scattered field, via adjoint-based projected
//! gradient descent constrained to a manufacturable material set.

pub mod analytic;
pub mod bessel;
pub mod config;
pub mod feasible;
pub mod fem;
pub mod geometry;
pub mod hexgrid;
pub mod intensity;
pub mod laplacian;
pub mod mesh;
pub mod ocp;
pub mod pipeline;
pub mod quadrature;
pub mod solver;
pub mod sparse;

mod error;
pub use error::CloakError;

pub type Complex = num_complex::Complex64;
pub type Result<T> = std::result::Result<T, CloakError>;
