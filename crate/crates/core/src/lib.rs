//! Numerical CR analytic-torsion densities.
//!
//! Pointwise curvature data (A, B) enter through the pencil A − 2ηB. From it
//! the crate builds heat-trace densities, η-integrated local densities, the
//! tail zeta function H(z) with its values at 0, and the two leading
//! coefficients of the torsion asymptotics. Model heat and Szegő kernels on
//! ℂⁿ and the Heisenberg group, plus brute-force spectral oracles, are
//! provided for cross-checking.

pub mod density;
pub mod error;
pub mod hermitian;
pub mod hx;
pub mod kernels;
pub mod mellin;
pub mod oracle;
pub mod quad;
pub mod series;
pub mod torsion;
pub mod verify;

pub use error::{Error, Result};
