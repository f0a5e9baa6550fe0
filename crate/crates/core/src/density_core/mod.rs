//! Densities on `[0, 1]` and the numerical machinery around them:
//! quadrature, tabulated CDFs, quantiles, sampling and distance integrals.

mod cdf;
mod density;
mod divergence;
mod quad;

pub use cdf::{build_cdf, mass_endpoint, quantile, sample_iid, CdfTable, DEFAULT_CDF_GRID};
pub use density::{DerivFn, Density, EvalFn};
pub use divergence::{hellinger_sq_densities, l1_distance};
pub(crate) use density::power_derivatives;
pub use quad::{gauss_legendre, integrate, QuadConfig};
pub(crate) use quad::segment_cuts;
