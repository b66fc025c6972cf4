//! Gaussian process emulation of Bayesian inverse problems.
//!
//! The crate builds emulators of a parameter-to-observation map `G` and of the
//! negative log-likelihood `Φ` for a one-dimensional elliptic model problem,
//! forms the mean, marginal and sample approximations of the posterior, and
//! measures their Hellinger distance to the exact posterior with randomly
//! shifted rank-1 lattice rules.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`kernels`] | Matérn and Gaussian covariances, `K_ν`, `Γ` |
//! | [`gp`] | conditioning, predictive mean/covariance, joint sampling, native norms |
//! | [`design`] | tensor grids, fill distance, separation radius, mesh ratio |
//! | [`forward_model`] | FEM solve of `-(κp')' = 1`, `G`, `Φ`, synthetic data |
//! | [`posterior`] | exact and approximate unnormalised posterior densities |
//! | [`quadrature`] | lattice rules, Hellinger / TV estimates, rate fits |
//! | [`experiment`] | the convergence-study driver behind the `gplab` binary |

pub mod design;
pub mod error;
pub mod experiment;
pub mod forward_model;
pub mod gp;
pub mod kernels;
pub mod points;
pub mod posterior;
pub mod quadrature;
pub mod rng;
pub mod summation;

pub use error::{Error, Result};
pub use points::PointSet;
