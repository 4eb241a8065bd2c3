//! Deterministic Fokker-Planck solvers for the grazing limits of the
//! wealth-exchange models.
//!
//! All three solvers share one finite-volume discretization of the ratio
//! form
//!
//! ```text
//! df/dt = d/dw [ A(w) g(w) d/dw (f / g) ],
//! ```
//!
//! with no-flux boundaries, backward-Euler time stepping, and face
//! coefficients assembled in log space (see [`scheme`]):
//!
//! * [`LinearFp`]: wealth coordinate, `A = w^{2+delta}`, inverse-Gamma
//!   equilibrium; covers the Maxwellian reference `delta = 0` as well.
//! * [`TransformedFp`]: unit-diffusion coordinate, `A = 1`, generalized-Gamma
//!   (or log-coordinate) equilibrium.
//! * [`NonlinearFp`]: the moment-coupled equation, reduced each step to the
//!   linear form with an effective mean and re-solved so the discrete mean is
//!   conserved exactly.
//!
//! The discretization is an M-matrix: solutions stay nonnegative, grid mass
//! is conserved to round-off, and the sampled equilibrium is a stationary
//! point of the iteration. Violations raise errors instead of being patched.

mod linear;
mod nonlinear;
mod scheme;
mod transformed;

pub use linear::{normalizing_kappa, LinearFp};
pub use nonlinear::NonlinearFp;
pub use transformed::{pushforward_density, TransformedFp};

use crate::analytic::AnalyticDensity;
use crate::diagnostics::{
    entropy_report_transformed, entropy_report_vs_analytic, DecayRow, DecaySeries,
};
use crate::error::{Error, Result};
use crate::grid::GridDensity;

/// Options for a fixed-horizon run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record a snapshot every this many steps (the initial and final states
    /// are always recorded).
    pub snapshot_every: usize,
}

/// Options for relaxation to the steady state.
#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    pub dt: f64,
    /// Give up (with an error) beyond this much simulated time.
    pub max_time: f64,
    /// Converged when `||u(t+dt) - u(t)||_1 / dt` drops below this.
    pub residual_tol: f64,
    pub snapshot_every: usize,
}

fn check_stepping(dt: f64, horizon: f64, snapshot_every: usize) -> Result<u64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParam(format!("dt must be positive, got {dt}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "time horizon must be positive, got {horizon}"
        )));
    }
    if snapshot_every == 0 {
        return Err(Error::InvalidParam(
            "snapshot_every must be at least 1".to_string(),
        ));
    }
    Ok(((horizon / dt).round() as u64).max(1))
}

/// Which coordinate the observables are evaluated in.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ObserveMode {
    Wealth { delta: f64 },
    Transformed,
}

/// Standard snapshot row: grid moments plus the entropy report against the
/// analytic reference.
pub(crate) fn observe_row(
    f: &GridDensity,
    reference: &AnalyticDensity,
    mode: ObserveMode,
    rho: Option<f64>,
) -> Result<DecayRow> {
    let report = match mode {
        ObserveMode::Wealth { delta } => entropy_report_vs_analytic(f, reference, delta, rho)?,
        ObserveMode::Transformed => entropy_report_transformed(f, reference, rho)?,
    };
    Ok(DecayRow {
        t: f.time,
        mass: f.mass(),
        mean: f.moment(1.0),
        m2: f.moment(2.0),
        entropy: report.relative_entropy,
        fisher: report.fisher,
        l1: report.l1_to_reference,
    })
}

/// Fixed-horizon driver: steps `f` with uniform `dt`, recording snapshots.
pub(crate) fn drive(
    f: &mut GridDensity,
    opts: &RunOptions,
    mut step: impl FnMut(&mut GridDensity, f64) -> Result<()>,
    mut observe: impl FnMut(&GridDensity) -> Result<DecayRow>,
) -> Result<DecaySeries> {
    let n_steps = check_stepping(opts.dt, opts.t_end, opts.snapshot_every)?;
    let t0 = f.time;
    let mut series = DecaySeries::new();
    series.push(observe(f)?);
    for k in 1..=n_steps {
        step(f, opts.dt)?;
        f.time = t0 + opts.dt * k as f64;
        if k % opts.snapshot_every as u64 == 0 || k == n_steps {
            series.push(observe(f)?);
        }
    }
    Ok(series)
}

/// Relaxation driver: steps until the update residual drops below tolerance
/// or errors after `max_time`.
pub(crate) fn drive_to_steady(
    f: &mut GridDensity,
    opts: &SteadyOptions,
    mut step: impl FnMut(&mut GridDensity, f64) -> Result<()>,
    mut observe: impl FnMut(&GridDensity) -> Result<DecayRow>,
) -> Result<DecaySeries> {
    check_stepping(opts.dt, opts.max_time, opts.snapshot_every)?;
    if !(opts.residual_tol > 0.0) {
        return Err(Error::InvalidParam(format!(
            "residual tolerance must be positive, got {}",
            opts.residual_tol
        )));
    }
    let t0 = f.time;
    let widths = f.grid.widths().to_vec();
    let mut prev = f.values.clone();
    let mut series = DecaySeries::new();
    series.push(observe(f)?);
    let mut k: u64 = 0;
    loop {
        step(f, opts.dt)?;
        k += 1;
        f.time = t0 + opts.dt * k as f64;
        let residual: f64 = f
            .values
            .iter()
            .zip(&prev)
            .zip(&widths)
            .map(|((&a, &b), &h)| (a - b).abs() * h)
            .sum::<f64>()
            / opts.dt;
        let snapshot_due = k % opts.snapshot_every as u64 == 0;
        if residual <= opts.residual_tol {
            series.push(observe(f)?);
            return Ok(series);
        }
        if snapshot_due {
            series.push(observe(f)?);
        }
        if f.time - t0 >= opts.max_time {
            return Err(Error::SteadyStateNonConvergence {
                max_time: opts.max_time,
                residual,
                tol: opts.residual_tol,
            });
        }
        prev.copy_from_slice(&f.values);
    }
}
