//! Finite-volume discretization of the ratio form `df/dt = d/dw [A g (f/g)']`.
//!
//! Interior face `j` sits between cells `j-1` and `j`; its discrete flux is
//!
//! ```text
//! J_j = A(e_j) g(e_j) [ u_j / g_j - u_{j-1} / g_{j-1} ] / (c_j - c_{j-1})
//!     = P_j u_j - Q_j u_{j-1},
//! ```
//!
//! with `P_j = exp(ln A(e_j) + ln g(e_j) - ln g(c_j)) / d_j` and `Q_j`
//! likewise against cell `j-1`. Assembling the coefficients from log-density
//! *differences* keeps them finite where `g` itself underflows (the
//! equilibria here drop below `exp(-700)` well inside sensible grids); the
//! exponent is capped at [`EXP_CAP`], which only engages where the
//! equilibrium is essentially zero and the implicit solve pins the solution
//! to its local shape anyway.
//!
//! Structure of the backward-Euler matrix `I - dt L`:
//! * off-diagonals nonpositive, weighted column sums equal the cell widths,
//!   so it is an M-matrix: solutions from nonnegative data stay nonnegative
//!   and the map contracts in `L1`;
//! * boundary faces carry zero flux, so `sum_i h_i (L u)_i = 0` exactly and
//!   mass is conserved up to the rounding of the tridiagonal solve;
//! * sampled-equilibrium data `u = const * exp(ln g)` gives `P_j u_j` and
//!   `Q_j u_{j-1}` that agree to one ulp, so the discrete equilibrium is
//!   stationary to round-off.
//!
//! Violations of positivity or mass conservation beyond a per-step budget
//! raise errors; nothing is clamped or renormalized.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity};
use std::sync::Arc;

/// Cap on the log of a face coefficient before exponentiation.
pub(crate) const EXP_CAP: f64 = 600.0;

/// Per-step relative mass-conservation budget (rounding of one tridiagonal
/// solve; exceeding it means the assembly is wrong, not that the step was
/// unlucky).
pub(crate) const STEP_MASS_TOL: f64 = 1e-11;

/// Threshold, relative to the peak value, below which a negative cell is
/// attributed to benign rounding rather than a scheme defect.
pub(crate) const NEGATIVE_CELL_TOL: f64 = 1e-12;

pub(crate) struct RatioScheme {
    grid: Arc<Grid>,
    ln_g: Vec<f64>,
    /// Face coefficients, indexed by face `0..=n`; boundary faces are zero.
    p: Vec<f64>,
    q: Vec<f64>,
}

impl RatioScheme {
    /// Builds the scheme from `ln A` and `ln g` as functions of position.
    /// Only differences of `ln g` enter, so `g` may be unnormalized.
    pub fn new(
        grid: Arc<Grid>,
        ln_a: impl Fn(f64) -> f64,
        ln_g_fn: impl Fn(f64) -> f64,
    ) -> Self {
        let n = grid.n_cells();
        let edges = grid.edges();
        let centers = grid.centers();
        let ln_g: Vec<f64> = centers.iter().map(|&c| ln_g_fn(c)).collect();
        let mut p = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        for j in 1..n {
            let base = ln_a(edges[j]) + ln_g_fn(edges[j]);
            let d = centers[j] - centers[j - 1];
            p[j] = (base - ln_g[j]).min(EXP_CAP).exp() / d;
            q[j] = (base - ln_g[j - 1]).min(EXP_CAP).exp() / d;
        }
        Self { grid, ln_g, p, q }
    }

    #[cfg(test)]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Sampled equilibrium, normalized to unit grid mass.
    pub fn equilibrium(&self) -> GridDensity {
        let peak = self.ln_g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut g = GridDensity {
            grid: Arc::clone(&self.grid),
            values: self.ln_g.iter().map(|&l| (l - peak).exp()).collect(),
            time: 0.0,
        };
        g.normalize().expect("equilibrium sample has positive mass");
        g
    }

    /// `(L u)_i`, for flux-residual diagnostics.
    #[cfg(test)]
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = self.grid.widths();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let j_right = if i + 1 < n {
                self.p[i + 1] * u[i + 1] - self.q[i + 1] * u[i]
            } else {
                0.0
            };
            let j_left = if i > 0 {
                self.p[i] * u[i] - self.q[i] * u[i - 1]
            } else {
                0.0
            };
            out[i] = (j_right - j_left) / h[i];
        }
        out
    }

    /// One backward-Euler step `(I - dt L) u+ = u`, in place. `time` is only
    /// used in error reports.
    pub fn step(&self, u: &mut [f64], dt: f64, time: f64) -> Result<()> {
        let n = u.len();
        debug_assert_eq!(n, self.grid.n_cells());
        let h = self.grid.widths();
        let mass_before: f64 = u.iter().zip(h).map(|(&v, &w)| v * w).sum();

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            lower[i] = -dt * self.q[i] / h[i];
            diag[i] = 1.0 + dt * (self.q[i + 1] + self.p[i]) / h[i];
            upper[i] = -dt * self.p[i + 1] / h[i];
        }
        thomas(&lower, &diag, &upper, u);

        let mut max = 0.0f64;
        for &v in u.iter() {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "non-finite value in implicit solve at t = {time}; dt = {dt} too large for the assembled coefficients"
                )));
            }
            max = max.max(v);
        }
        if let Some((i, &v)) = u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite values"))
        {
            if v < -NEGATIVE_CELL_TOL * max {
                return Err(Error::NegativeCell {
                    cell: i,
                    value: v,
                    time,
                });
            }
        }
        let mass_after: f64 = u.iter().zip(h).map(|(&v, &w)| v * w).sum();
        let drift = (mass_after - mass_before).abs();
        let budget = STEP_MASS_TOL * mass_before.abs().max(f64::MIN_POSITIVE);
        if drift > budget {
            return Err(Error::MassDrift {
                drift,
                tol: budget,
                time,
            });
        }
        Ok(())
    }
}

/// Tridiagonal solve, overwriting `x` (which enters as the right-hand side).
/// No pivoting: the backward-Euler matrix is an M-matrix, for which plain
/// elimination is stable.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], x: &mut [f64]) {
    let n = x.len();
    let mut c_prime = vec![0.0; n];
    c_prime[0] = upper[0] / diag[0];
    x[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c_prime[i - 1];
        c_prime[i] = upper[i] / denom;
        x[i] = (x[i] - lower[i] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
}
