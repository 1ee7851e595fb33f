//! Solvers for discrete fractional diffusion problems `u = L^{-s} b`.
//!
//! The operator `L = M⁻¹K` comes from a symmetric definite pencil
//! ([`operator::OperatorPencil`]). Approximations of `L^{-s} b` are built from
//! rational Krylov spaces ([`krylov`]), best uniform rational approximations
//! ([`rational`]), quadrature-based reduced basis surrogates and the dense
//! eigen-decomposition oracle ([`schemes`]).

pub mod densecore;
pub mod error;
pub mod krylov;
pub mod operator;
pub mod rational;
pub mod schemes;
pub mod specfun;

pub use error::{Error, Result};
pub use operator::{OperatorPencil, Pole, SpectralInterval, Vector};
