//! Numerical companion to the nonequivalence of density estimation and the
//! Gaussian white noise model for small densities.
//!
//! The crate builds the two-point counterexample `(f_1, f_2)` around a base
//! density `f_0`, evaluates every information distance involved (L1,
//! Hellinger, total variation in both experiments), the binary Le Cam
//! deficiency lower bound, Hölder and flat-Hölder norms, and validates the
//! total-variation formulas by Monte Carlo simulation of both experiments.
//!
//! Module map:
//!
//! * [`density_core`]: densities on `[0, 1]`, adaptive quadrature, CDF tables,
//!   inverse-CDF sampling and the L1 / squared Hellinger integrals.
//! * [`norms`]: Hölder norm, flatness seminorm and membership certificates.
//! * [`counterexample`]: the perturbation construction and its identities.
//! * [`distances`]: closed-form distances in both experiments and the
//!   deficiency lower bound.
//! * [`experiments`]: Monte Carlo Neyman–Pearson testing in both experiments.
//! * [`parametric`]: the location family `g(x - θ)` with `g = 960x²(1/2-x)²`.
//! * [`cli`]: the `nonequiv` command line front end.

pub mod cli;
pub mod counterexample;
pub mod density_core;
pub mod distances;
mod error;
pub mod experiments;
pub mod jet;
pub mod norms;
pub mod output;
pub mod parametric;

pub use error::{Error, Result};
