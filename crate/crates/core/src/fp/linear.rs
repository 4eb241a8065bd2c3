//! Linear Fokker-Planck solver in the wealth coordinate.
//!
//! The grazing limit of the linear wealth-exchange model with kernel
//! `kappa (v w)^delta` is
//!
//! ```text
//! df/dt = (kappa sigma M_delta / 2) d/dw [ w^{2+delta} g (f/g)' ],
//! ```
//!
//! with `g` the inverse-Gamma equilibrium and `M_delta` its `delta`-moment.
//! [`LinearFp::normalized`] absorbs the prefactor into the time unit (the
//! convention `kappa = 2 / (sigma M_delta)`, see [`normalizing_kappa`]);
//! [`LinearFp::kinetic`] keeps kinetic time using the model's own kernel
//! constant. `delta = 0` gives the Maxwellian reference equation with
//! diffusion weight `w^2`.

use super::scheme::RatioScheme;
use super::{drive, drive_to_steady, observe_row, ObserveMode, RunOptions, SteadyOptions};
use crate::analytic::{inverse_gamma_moment_closed, rho_delta, AnalyticDensity};
use crate::diagnostics::{DecayRow, DecaySeries};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity, GRID_COVERAGE_TOL};
use crate::params::ModelParams;
use std::sync::Arc;

/// `delta`-moment of the equilibrium `M_delta`, in closed form.
pub(crate) fn equilibrium_m_delta(params: &ModelParams) -> Result<f64> {
    let (mu, m, delta) = (params.mu(), params.m(), params.delta());
    let moment = inverse_gamma_moment_closed(1.0 + delta + mu, mu * m, delta)?;
    moment.finite().ok_or_else(|| Error::DivergentMoment {
        density: "InverseGammaDelta".to_string(),
        order: delta,
    })
}

/// The kernel constant that makes kinetic and normalized time agree:
/// `kappa = 2 / (sigma M_delta)`.
pub fn normalizing_kappa(params: &ModelParams) -> Result<f64> {
    params.require_mu_above_one()?;
    Ok(2.0 / (params.sigma() * equilibrium_m_delta(params)?))
}

pub struct LinearFp {
    scheme: RatioScheme,
    target: AnalyticDensity,
    rho: Option<f64>,
    delta: f64,
    prefactor: f64,
}

impl LinearFp {
    /// Solver in normalized time (prefactor 1).
    pub fn normalized(params: &ModelParams, grid: &Arc<Grid>) -> Result<Self> {
        Self::build(params, grid, 1.0)
    }

    /// Solver in kinetic time: prefactor `kappa sigma M_delta / 2` from the
    /// model's kernel constant.
    pub fn kinetic(params: &ModelParams, grid: &Arc<Grid>) -> Result<Self> {
        let pre = params.kappa_kernel() * params.sigma() * equilibrium_m_delta(params)? / 2.0;
        Self::build(params, grid, pre)
    }

    fn build(params: &ModelParams, grid: &Arc<Grid>, prefactor: f64) -> Result<Self> {
        params.require_mu_above_one()?;
        let (mu, m, delta) = (params.mu(), params.m(), params.delta());
        let target = AnalyticDensity::inverse_gamma_delta(mu, m, delta)?;
        let outside = target.mass_outside(grid.lo(), grid.hi())?;
        if outside > GRID_COVERAGE_TOL {
            return Err(Error::GridCoverage {
                covered: 1.0 - outside,
                required: 1.0 - GRID_COVERAGE_TOL,
            });
        }
        let rho = if delta > 0.0 {
            Some(rho_delta(delta, mu, m)?)
        } else {
            None
        };
        let scheme = RatioScheme::new(
            Arc::clone(grid),
            move |w| (2.0 + delta) * w.ln(),
            move |w| target.ln_pdf_unchecked(w),
        );
        Ok(Self {
            scheme,
            target,
            rho,
            delta,
            prefactor,
        })
    }

    /// The analytic equilibrium the solver relaxes to.
    pub fn target(&self) -> &AnalyticDensity {
        &self.target
    }

    /// Uniform convexity constant of the transformed potential (`None` for
    /// the Maxwellian reference).
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// Sampled equilibrium: the exact stationary state of the discrete map.
    pub fn equilibrium(&self) -> GridDensity {
        self.scheme.equilibrium()
    }

    /// One backward-Euler step of length `dt` (solver time units).
    pub fn step(&self, f: &mut GridDensity, dt: f64) -> Result<()> {
        self.scheme.step(&mut f.values, dt * self.prefactor, f.time)
    }

    pub fn observe(&self, f: &GridDensity) -> Result<DecayRow> {
        observe_row(
            f,
            &self.target,
            ObserveMode::Wealth { delta: self.delta },
            self.rho,
        )
    }

    /// Runs to `t_end`, recording snapshots.
    pub fn run(&self, f: &mut GridDensity, opts: &RunOptions) -> Result<DecaySeries> {
        drive(f, opts, |g, dt| self.step(g, dt), |g| self.observe(g))
    }

    /// Relaxes until the update residual falls below tolerance.
    pub fn solve_to_steady(&self, f: &mut GridDensity, opts: &SteadyOptions) -> Result<DecaySeries> {
        drive_to_steady(f, opts, |g, dt| self.step(g, dt), |g| self.observe(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::new(0.2, 0.2, 1.0, 0.5, 1.0).unwrap()
    }

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::log_spaced(1e-4, 1e3, 240).unwrap())
    }

    #[test]
    fn normalizing_kappa_closed_form() {
        // mu = 2, m = 1, delta = 0.5: M_delta = 2^0.5 Gamma(3)/Gamma(3.5).
        let p = params();
        let m_delta = equilibrium_m_delta(&p).unwrap();
        let expected = 2f64.powf(0.5)
            * (statrs::function::gamma::ln_gamma(3.0) - statrs::function::gamma::ln_gamma(3.5))
                .exp();
        assert_relative_eq!(m_delta, expected, max_relative = 1e-12);
        assert_relative_eq!(
            normalizing_kappa(&p).unwrap(),
            2.0 / (0.2 * m_delta),
            max_relative = 1e-12
        );
    }

    #[test]
    fn entropy_decays_monotonically() {
        let p = params();
        let g = grid();
        let solver = LinearFp::normalized(&p, &g).unwrap();
        let mut f = GridDensity::from_fn(&g, |w| if (0.5..1.5).contains(&w) { 1.0 } else { 0.0 });
        f.normalize().unwrap();
        let series = solver
            .run(
                &mut f,
                &RunOptions {
                    dt: 0.01,
                    t_end: 4.0,
                    snapshot_every: 40,
                },
            )
            .unwrap();
        let hs = series.entropies();
        assert!(hs[0] > 0.0);
        for w in hs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "H increased: {} -> {}", w[0], w[1]);
        }
        // Mass stays put throughout.
        for row in &series.rows {
            assert!((row.mass - 1.0).abs() < 1e-11, "mass {}", row.mass);
        }
    }

    #[test]
    fn kinetic_and_normalized_agree_under_the_normalizing_kernel() {
        let base = params();
        let kappa = normalizing_kappa(&base).unwrap();
        let p = ModelParams::new(0.2, 0.2, 1.0, 0.5, kappa).unwrap();
        let g = grid();
        let a = LinearFp::normalized(&p, &g).unwrap();
        let b = LinearFp::kinetic(&p, &g).unwrap();
        let mut fa = GridDensity::from_fn(&g, |w| (-(w - 1.5).powi(2) / 0.2).exp());
        fa.normalize().unwrap();
        let mut fb = fa.clone();
        for _ in 0..100 {
            a.step(&mut fa, 0.01).unwrap();
            b.step(&mut fb, 0.01).unwrap();
        }
        let dist = fa.l1_distance(&fb).unwrap();
        assert!(dist < 1e-13, "normalized vs kinetic distance {dist:e}");
    }

    #[test]
    fn maxwellian_reference_runs() {
        let p = ModelParams::reference_delta0(0.2, 0.2, 1.0, 1.0).unwrap();
        let g = grid();
        let solver = LinearFp::normalized(&p, &g).unwrap();
        assert!(solver.rho().is_none());
        let mut f = solver.equilibrium();
        for _ in 0..200 {
            solver.step(&mut f, 0.01).unwrap();
        }
        let dist = f.l1_distance(&solver.equilibrium()).unwrap();
        assert!(dist < 1e-11, "delta=0 equilibrium drifted {dist:e}");
    }

    #[test]
    fn steady_solve_reaches_equilibrium() {
        let p = params();
        let g = grid();
        let solver = LinearFp::normalized(&p, &g).unwrap();
        let mut f = GridDensity::from_fn(&g, |w| (-(w - 2.0).powi(2)).exp());
        f.normalize().unwrap();
        let series = solver
            .solve_to_steady(
                &mut f,
                &SteadyOptions {
                    dt: 0.05,
                    max_time: 400.0,
                    residual_tol: 1e-10,
                    snapshot_every: 100,
                },
            )
            .unwrap();
        let dist = f.l1_distance(&solver.equilibrium()).unwrap();
        assert!(dist < 1e-7, "steady state off by {dist:e}");
        assert!(series.len() >= 2);
        // An impossible deadline errors instead of stopping early.
        let mut h = GridDensity::from_fn(&g, |w| (-(w - 2.0).powi(2)).exp());
        h.normalize().unwrap();
        let err = solver
            .solve_to_steady(
                &mut h,
                &SteadyOptions {
                    dt: 0.05,
                    max_time: 0.3,
                    residual_tol: 1e-12,
                    snapshot_every: 100,
                },
            )
            .unwrap_err();
        assert!(matches!(err, Error::SteadyStateNonConvergence { .. }), "{err}");
    }

    #[test]
    fn grid_must_cover_the_equilibrium() {
        let p = params();
        let tiny = Arc::new(Grid::log_spaced(0.5, 2.0, 32).unwrap());
        assert!(matches!(
            LinearFp::normalized(&p, &tiny),
            Err(Error::GridCoverage { .. })
        ));
    }
}
