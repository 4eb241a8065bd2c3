//! Fokker-Planck solver in the unit-diffusion coordinate.
//!
//! Under `y = (2/delta) w^{-delta/2}` (or `y = ln w` for `delta = 0`) the
//! linear equation becomes `dh/dt = d/dy [ g (h/g)' ]` with constant
//! diffusion weight and a generalized-Gamma (resp. log-coordinate)
//! equilibrium whose potential is uniformly convex. The solver runs the same
//! ratio-form scheme with `A = 1` on a `y`-grid; [`pushforward_density`]
//! carries grid densities between a wealth grid and its matched transform
//! (cell images of cells, see [`Grid::transformed`]).

use super::scheme::RatioScheme;
use super::{drive, drive_to_steady, observe_row, ObserveMode, RunOptions, SteadyOptions};
use crate::analytic::{ggamma_params, rho_ggamma, to_transformed, AnalyticDensity};
use crate::diagnostics::{DecayRow, DecaySeries};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity, GRID_COVERAGE_TOL};
use crate::params::ModelParams;
use std::sync::Arc;

pub struct TransformedFp {
    scheme: RatioScheme,
    target: AnalyticDensity,
    rho: Option<f64>,
}

impl TransformedFp {
    /// Solver on a transformed-coordinate grid, in normalized time.
    pub fn new(params: &ModelParams, grid_y: &Arc<Grid>) -> Result<Self> {
        params.require_mu_above_one()?;
        let (mu, m, delta) = (params.mu(), params.m(), params.delta());
        let (target, rho) = if delta > 0.0 {
            let gg = ggamma_params(delta, mu, m)?;
            (
                AnalyticDensity::generalized_gamma(gg.kappa_shape, gg.theta, gg.nu)?,
                Some(rho_ggamma(&gg)?),
            )
        } else {
            (AnalyticDensity::log_transformed_delta0(mu, m)?, None)
        };
        let outside = target.mass_outside(grid_y.lo(), grid_y.hi())?;
        if outside > GRID_COVERAGE_TOL {
            return Err(Error::GridCoverage {
                covered: 1.0 - outside,
                required: 1.0 - GRID_COVERAGE_TOL,
            });
        }
        let scheme = RatioScheme::new(
            Arc::clone(grid_y),
            |_| 0.0,
            move |y| target.ln_pdf_unchecked(y),
        );
        Ok(Self {
            scheme,
            target,
            rho,
        })
    }

    pub fn target(&self) -> &AnalyticDensity {
        &self.target
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn equilibrium(&self) -> GridDensity {
        self.scheme.equilibrium()
    }

    pub fn step(&self, f: &mut GridDensity, dt: f64) -> Result<()> {
        self.scheme.step(&mut f.values, dt, f.time)
    }

    pub fn observe(&self, f: &GridDensity) -> Result<DecayRow> {
        observe_row(f, &self.target, ObserveMode::Transformed, self.rho)
    }

    pub fn run(&self, f: &mut GridDensity, opts: &RunOptions) -> Result<DecaySeries> {
        drive(f, opts, |g, dt| self.step(g, dt), |g| self.observe(g))
    }

    pub fn solve_to_steady(&self, f: &mut GridDensity, opts: &SteadyOptions) -> Result<DecaySeries> {
        drive_to_steady(f, opts, |g, dt| self.step(g, dt), |g| self.observe(g))
    }
}

/// Carries a density from a wealth grid to its matched transformed grid (or
/// back): cell values are multiplied by the inverse Jacobian `w^{1+delta/2}`
/// and reordered to the image cells. Errors if the grids are not matched.
pub fn pushforward_density(
    f_x: &GridDensity,
    grid_y: &Arc<Grid>,
    delta: f64,
) -> Result<GridDensity> {
    let n = f_x.grid.n_cells();
    if grid_y.n_cells() != n {
        return Err(Error::InvalidParam(format!(
            "matched grids must have equal cell counts, got {} and {}",
            n,
            grid_y.n_cells()
        )));
    }
    let xc = f_x.grid.centers();
    // Orientation: the map reverses for delta > 0, keeps order for delta = 0.
    let y_first = to_transformed(xc[0], delta)?;
    let y_last = to_transformed(xc[n - 1], delta)?;
    let reversed = y_first > y_last;
    let mut values = vec![0.0; n];
    for i in 0..n {
        let j = if reversed { n - 1 - i } else { i };
        let y = to_transformed(xc[i], delta)?;
        if (y - grid_y.centers()[j]).abs() > 1e-9 * (1.0 + y.abs()) {
            return Err(Error::InvalidParam(format!(
                "grid_y is not the matched transform: cell {j} center {} vs image {y}",
                grid_y.centers()[j]
            )));
        }
        values[j] = f_x.values[i] * xc[i].powf(1.0 + 0.5 * delta);
    }
    Ok(GridDensity {
        grid: Arc::clone(grid_y),
        values,
        time: f_x.time,
    })
}
