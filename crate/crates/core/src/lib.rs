//! Simulation and statistical verification of fractional Brownian motion and
//! Riemann-Liouville paths, their local times and additive functionals.
//!
//! The crate is organized in layers:
//!
//! * [`process`] — exact-in-distribution path samplers (Cholesky, circulant
//!   embedding, integrated-kernel convolution) and analytic covariances.
//! * [`localtime`] — occupation measures and local-time estimators
//!   (epsilon-occupation and truncated Fourier inversion), plus the
//!   sup-difference statistics built on local-time fields.
//! * [`functional`] — additive functionals of a path for a library of test
//!   functions with known integrals, and residual-rate regression.
//! * [`verify`] — distributional identity tests (scaling, translation
//!   invariance, first-order limit) and iterated-logarithm constants.
//! * [`checks`] — named end-to-end verification experiments combining the
//!   layers above; this is what the CLI and the acceptance suite run.

pub mod checks;
pub mod error;
pub mod functional;
pub mod io;
pub mod localtime;
pub mod process;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
