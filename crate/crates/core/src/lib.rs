//! Boundary and nodal lengths of Gaussian random spherical harmonics.
//!
//! The crate samples random eigenfunctions of the spherical Laplacian,
//! measures the length of their level sets, computes the low-order terms of
//! the Wiener chaos expansion of those lengths and aggregates Monte Carlo
//! statistics (means, variances, correlations and partial correlations
//! given the random `L²` norm).
//!
//! Modules, bottom up: [`legendre`], [`field`], [`geometry`], [`chaos`],
//! [`stats`], [`experiments`].

pub mod chaos;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod legendre;
pub mod stats;

pub use error::{Error, Result};

/// Standard Gaussian density.
#[inline]
pub fn gaussian_density(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
