//! Numerical potential theory of subordinate Brownian motions.
//!
//! The crate is organised bottom-up:
//!
//! * [`bernstein`]: Laplace exponents, the built-in catalog, composition and
//!   conjugation.
//! * [`regvar`]: regular-variation index fits, de Haan limits, Potter bounds.
//! * [`laplace`]: quadrature on `(0, ∞)`, numerical Laplace inversion and the
//!   power-weighted exponential integral used by the kernel asymptotics.
//! * [`densities`]: Lévy and potential densities of the subordinator.
//! * [`kernels`]: jump kernel and Green function of the subordinate Brownian
//!   motion, ratio sweeps against their asymptotic comparison functions.
//! * [`montecarlo`]: samplers, exit simulation and the probabilistic checks.
//! * [`verify`]: the acceptance checks shared by the CLI and the test suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod densities;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod laplace;
pub mod montecarlo;
pub mod regvar;
pub mod special;
pub mod sweep;
pub mod verify;

pub use bernstein::{lookup, CatalogEntry, CatalogKey, LaplaceExponent};
pub use error::{Error, Result};
pub use sweep::{RatioSweep, Verdict};
