//! Kinetic wealth-exchange models with non-Maxwellian interaction kernels.
//!
//! The library covers four layers of one toolchain:
//!
//! * [`analytic`] — closed-form equilibrium densities, their moments, the
//!   convexity constant `rho(delta)` of the associated potential, and the
//!   coordinate transform that maps the wealth variable to a unit-diffusion
//!   frame.
//! * [`mc`] — a direct-simulation Monte Carlo engine for binary and
//!   market-mediated trades with kernel `kappa * (v w)^delta`, including the
//!   grazing (small-trade) scaling driver.
//! * [`fp`] — structure-preserving finite-volume solvers for the limiting
//!   Fokker-Planck equations; the discretization keeps the analytic
//!   equilibrium as an exact fixed point and conserves mass to round-off.
//! * [`diagnostics`] — relative entropy, weighted Fisher information,
//!   log-Sobolev audits, decay-rate fits, and Gini coefficients.
//!
//! Everything downstream of a seed is deterministic: identical inputs produce
//! bit-identical outputs, independent of thread count.

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod fp;
pub mod grid;
pub mod io;
pub mod mc;
pub mod params;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use params::ModelParams;
