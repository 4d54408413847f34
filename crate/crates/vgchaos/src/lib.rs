//! Variance-Gamma approximation bounds for functionals of Gaussian vectors.
//!
//! The crate realizes second-order Stein / Malliavin-type machinery over
//! finite-dimensional coordinate spaces. A symmetric matrix stands for a
//! kernel of the second Gaussian chaos, a dense symmetric tensor for a
//! kernel of order `q >= 2`, and all distances to Variance-Gamma target
//! laws are controlled through exact cumulant and contraction functionals
//! cross-checked by reproducible Monte Carlo.
//!
//! Module map:
//!
//! - [`vgdist`] — Variance-Gamma family analytics: density (via modified
//!   Bessel functions), cumulants and moments, sampling, CDF/quantile
//!   tables, special and limiting cases.
//! - [`chaos2`] — second-chaos kernels as symmetric matrices: cumulants by
//!   traces, pathwise Gamma functionals, bound reports, spectral
//!   diagnostics and exact-limit kernels.
//! - [`tensorq`] — dense symmetric tensor calculus for general order:
//!   contractions, symmetrization, Gamma decompositions and the
//!   contraction-norm bound functionals.
//! - [`stein`] — Stein characterization residuals, explicit constants for
//!   the symmetric case and a collocation solver for the second-order
//!   Stein equation.
//! - [`empirical`] — Monte Carlo layer: sample sets, one-dimensional
//!   Wasserstein distances, unbiased k-statistics, homogeneous sums and
//!   the multivariate bound assembly.
//! - [`experiment`] — reproducible experiment runner backing the CLI.
//!
//! Everything analytic is pure; sampling is deterministic given a seed and
//! the fixed chunk layout of [`rng::SeedStream`].

pub mod bessel;
pub mod chaos2;
pub mod empirical;
pub mod error;
pub mod experiment;
pub mod gamma;
pub mod numeric;
pub mod quad;
pub mod report;
pub mod rng;
pub mod stein;
pub mod tensorq;
pub mod vgdist;

pub use error::{Result, VgError};
pub use report::{BoundReport, BoundTerm};
