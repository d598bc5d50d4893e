//! Smallest-eigenvalue statistics of the real Wishart-Laguerre ensemble (chGOE)
//! with even topology `nu = 2k`.
//!
//! Finite-`p` gap probabilities and densities are built from skew-orthogonal
//! polynomials and Pfaffians; the hard-edge limits are Bessel-function
//! Pfaffians. A Monte-Carlo sampler of (correlated) real Wishart matrices is
//! included for validation.

pub mod distributions;
pub mod error;
pub mod kernels;
pub mod microscopic;
pub mod montecarlo;
pub mod pfaffian;
pub mod quad;
pub mod selftest;
pub mod sop;
pub mod specfun;

pub use error::{Error, Result};
pub use specfun::LogScaled;
