//! Error type shared by every module in the crate.
//!
//! The variants are grouped by failure class rather than by module: parameter
//! validation, numerical-invariant violations, and non-convergence each map to
//! a distinct exit code in the CLI harness.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received parameters outside its documented
    /// domain (negative scales, exponents out of range, inconsistent specs).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// An adaptive quadrature failed to reach the requested tolerance, or the
    /// integrand is not integrable on the requested range.
    #[error("quadrature did not converge: {context} (best estimate {estimate:e}, error bound {error:e})")]
    QuadratureNonConvergence {
        context: String,
        estimate: f64,
        error: f64,
    },

    /// A requested moment diverges for the given density.
    #[error("moment of order {order} diverges for {density}")]
    DivergentMoment { density: String, order: f64 },

    /// The per-interaction acceptance probability `dt * kernel` exceeded one.
    /// The step size is too large for the current wealth range; the step is
    /// abandoned rather than silently clipped.
    #[error("acceptance bound overflow: dt * kernel = {probability:.3e} > 1 at sweep {sweep} (reduce dt below {dt_max:.3e})")]
    AcceptanceOverflow {
        sweep: u64,
        probability: f64,
        dt_max: f64,
    },

    /// A Fokker-Planck step produced a genuinely negative cell value.
    #[error("negative cell value after step: cell {cell} = {value:e} at t = {time}")]
    NegativeCell { cell: usize, value: f64, time: f64 },

    /// Mass conservation was violated beyond the documented per-step budget.
    #[error("mass drift {drift:e} exceeds tolerance {tol:e} at t = {time}")]
    MassDrift { drift: f64, tol: f64, time: f64 },

    /// A moment required by the nonlinear solver degenerated to ~zero.
    #[error("degenerate density: moment m_{order} = {value:e} below 1e-14")]
    DegenerateMoment { order: f64, value: f64 },

    /// `f` puts non-negligible mass where the reference density vanishes, so
    /// the relative entropy is undefined.
    #[error("absolute continuity violated: mass {mass:e} of f lies where the reference density vanishes")]
    AbsoluteContinuity { mass: f64 },

    /// Steady-state iteration hit `max_time` before meeting its residual
    /// target.
    #[error("no steady state by t = {max_time}: final residual {residual:e} > tolerance {tol:e}")]
    SteadyStateNonConvergence {
        max_time: f64,
        residual: f64,
        tol: f64,
    },

    /// The grid does not cover enough of the reference density's mass.
    #[error("grid covers only {covered} of the reference mass (need >= {required})")]
    GridCoverage { covered: f64, required: f64 },

    /// A density input contained negative, NaN, or non-normalizable values.
    #[error("not a density: {0}")]
    NotADensity(String),

    /// Filesystem failure while reading configuration or writing outputs.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON configuration or serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
