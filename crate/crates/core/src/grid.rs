//! Finite-volume grids and densities living on them.
//!
//! A [`Grid`] is a strictly increasing set of cell edges plus a designated
//! center per cell. Log-spaced grids use the geometric mean of the edges as
//! the center, uniform grids the midpoint. Densities are stored as cell-center
//! values; cell mass is `value * width`, and all integral functionals
//! (moments, L1 distances, entropies) are midpoint sums over cells.
//!
//! The same binning is shared by the Fokker-Planck solvers and the Monte
//! Carlo histograms, so their outputs are directly comparable.

use crate::analytic::AnalyticDensity;
use crate::error::{Error, Result};
use std::sync::Arc;

/// Maximum equilibrium mass allowed outside an auto-chosen domain.
pub const DOMAIN_MASS_TOL: f64 = 1e-8;

/// Minimum equilibrium coverage a grid must have before a solver accepts it.
pub const GRID_COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    edges: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl Grid {
    /// Log-spaced grid on `[lo, hi]` with `n` cells; centers at the geometric
    /// mean of the cell edges.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(Error::InvalidParam(format!(
                "log grid needs 0 < lo < hi and n >= 2, got ({lo}, {hi}, {n})"
            )));
        }
        let (lln, hln) = (lo.ln(), hi.ln());
        let edges: Vec<f64> = (0..=n)
            .map(|i| (lln + (hln - lln) * i as f64 / n as f64).exp())
            .collect();
        let centers = edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect();
        Self::from_parts(edges, centers)
    }

    /// Uniform grid on `[lo, hi]` with `n` cells; centers at the midpoints.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo && n >= 2) {
            return Err(Error::InvalidParam(format!(
                "uniform grid needs lo < hi and n >= 2, got ({lo}, {hi}, {n})"
            )));
        }
        let step = (hi - lo) / n as f64;
        let edges: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
        let centers = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        Self::from_parts(edges, centers)
    }

    /// Grid from explicit edges and centers. Used by the coordinate-transform
    /// machinery, where centers must be images of the original centers rather
    /// than means of the new edges.
    pub fn from_parts(edges: Vec<f64>, centers: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 || centers.len() + 1 != edges.len() {
            return Err(Error::InvalidParam(format!(
                "grid needs n+1 edges and n centers with n >= 2, got {} and {}",
                edges.len(),
                centers.len()
            )));
        }
        for i in 0..centers.len() {
            if !(edges[i] < centers[i] && centers[i] < edges[i + 1]) {
                return Err(Error::InvalidParam(format!(
                    "cell {i} violates edge < center < edge: {} !< {} !< {}",
                    edges[i], centers[i], edges[i + 1]
                )));
            }
        }
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        Ok(Self {
            edges,
            centers,
            widths,
        })
    }

    /// Domain `[lo, hi]` for a reference density: the defaults
    /// `[m e-4, m e3]` are widened decade by decade until the mass outside
    /// drops below `DOMAIN_MASS_TOL`.
    pub fn auto_domain(reference: &AnalyticDensity, m: f64) -> Result<(f64, f64)> {
        let mut lo = m * 1e-4;
        let mut hi = m * 1e3;
        for _ in 0..12 {
            if reference.mass_outside(lo, hi)? < DOMAIN_MASS_TOL {
                return Ok((lo, hi));
            }
            lo *= 0.1;
            hi *= 10.0;
        }
        Err(Error::GridCoverage {
            covered: 1.0 - reference.mass_outside(lo, hi)?,
            required: 1.0 - DOMAIN_MASS_TOL,
        })
    }

    /// Image of this grid under the unit-diffusion transform: edges and
    /// centers are mapped pointwise (and reversed when the map is
    /// orientation-reversing, i.e. for `delta > 0`), so cell `j` of the image
    /// corresponds to a definite cell of the original.
    pub fn transformed(&self, delta: f64) -> Result<Grid> {
        let mut edges: Vec<f64> = self
            .edges
            .iter()
            .map(|&x| crate::analytic::to_transformed(x, delta))
            .collect::<Result<_>>()?;
        let mut centers: Vec<f64> = self
            .centers
            .iter()
            .map(|&x| crate::analytic::to_transformed(x, delta))
            .collect::<Result<_>>()?;
        if edges.first() > edges.last() {
            edges.reverse();
            centers.reverse();
        }
        Self::from_parts(edges, centers)
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }
    pub fn lo(&self) -> f64 {
        self.edges[0]
    }
    pub fn hi(&self) -> f64 {
        *self.edges.last().expect("nonempty edges")
    }

    /// Cell index containing `x`, or `None` outside `[lo, hi)`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo() && x < self.hi()) {
            return None;
        }
        // partition_point returns the first edge > x; its predecessor is the cell.
        let idx = self.edges.partition_point(|&e| e <= x);
        Some(idx.saturating_sub(1).min(self.n_cells() - 1))
    }

    /// Raw histogram of samples as a density on this grid, plus the count that
    /// fell outside the domain.
    pub fn histogram(self: &Arc<Self>, samples: &[f64]) -> (GridDensity, usize) {
        let mut counts = vec![0u64; self.n_cells()];
        let mut outside = 0usize;
        for &x in samples {
            match self.locate(x) {
                Some(i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        let n = samples.len().max(1) as f64;
        let values = counts
            .iter()
            .zip(&self.widths)
            .map(|(&c, &w)| c as f64 / (n * w))
            .collect();
        (
            GridDensity {
                grid: Arc::clone(self),
                values,
                time: 0.0,
            },
            outside,
        )
    }

    /// Histogram with one pseudo-count added per cell (additive `1/(N width)`
    /// smoothing, renormalized), so entropies against a reference density stay
    /// finite in empty cells.
    pub fn smoothed_histogram(self: &Arc<Self>, samples: &[f64]) -> (GridDensity, usize) {
        let mut counts = vec![0u64; self.n_cells()];
        let mut outside = 0usize;
        for &x in samples {
            match self.locate(x) {
                Some(i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        let total = (samples.len() - outside) as f64 + self.n_cells() as f64;
        let values = counts
            .iter()
            .zip(&self.widths)
            .map(|(&c, &w)| (c as f64 + 1.0) / (total * w))
            .collect();
        (
            GridDensity {
                grid: Arc::clone(self),
                values,
                time: 0.0,
            },
            outside,
        )
    }
}

/// A density sampled at cell centers of a shared grid.
#[derive(Debug, Clone)]
pub struct GridDensity {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridDensity {
    /// Tabulates a callable at the cell centers.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers().iter().map(|&c| f(c)).collect();
        Self {
            grid: Arc::clone(grid),
            values,
            time: 0.0,
        }
    }

    /// Tabulates an analytic density at the cell centers and renormalizes to
    /// unit grid mass, giving the discrete stationary profile of the solvers.
    pub fn from_analytic_normalized(grid: &Arc<Grid>, d: &AnalyticDensity) -> Result<Self> {
        let mut gd = Self::from_fn(grid, |c| d.ln_pdf_unchecked(c).exp());
        let mass = gd.mass();
        if !(mass > 0.0) {
            return Err(Error::NotADensity(format!(
                "{} has zero mass on the grid",
                d.name()
            )));
        }
        for v in &mut gd.values {
            *v /= mass;
        }
        Ok(gd)
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.widths())
            .map(|(&v, &w)| v * w)
            .sum()
    }

    /// Grid moment `sum c^alpha v h`.
    pub fn moment(&self, alpha: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.centers())
            .zip(self.grid.widths())
            .map(|((&v, &c), &w)| c.powf(alpha) * v * w)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        let mass = self.mass();
        if mass == 0.0 {
            return 0.0;
        }
        self.moment(1.0) / mass
    }

    /// `sum |f - g| h`; both densities must live on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.widths())
            .map(|((&a, &b), &w)| (a - b).abs() * w)
            .sum())
    }

    pub fn check_same_grid(&self, other: &GridDensity) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::InvalidParam(
                "densities live on different grids".to_string(),
            ))
        }
    }

    /// Rescales to unit mass.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::NotADensity(format!(
                "cannot normalize density with mass {mass}"
            )));
        }
        for v in &mut self.values {
            *v /= mass;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_grid_structure() {
        let g = Grid::log_spaced(1e-2, 1e2, 8).unwrap();
        assert_eq!(g.n_cells(), 8);
        assert_eq!(g.edges().len(), 9);
        // Geometric progression of edges.
        let r = g.edges()[1] / g.edges()[0];
        for e in g.edges().windows(2) {
            assert_relative_eq!(e[1] / e[0], r, max_relative = 1e-12);
        }
        // Centers strictly inside their cells.
        for i in 0..g.n_cells() {
            assert!(g.edges()[i] < g.centers()[i] && g.centers()[i] < g.edges()[i + 1]);
        }
    }

    #[test]
    fn locate_and_histogram() {
        let g = Arc::new(Grid::uniform(0.0, 1.0, 4).unwrap());
        assert_eq!(g.locate(0.1), Some(0));
        assert_eq!(g.locate(0.25), Some(1));
        assert_eq!(g.locate(0.999), Some(3));
        assert_eq!(g.locate(1.0), None);
        assert_eq!(g.locate(-0.1), None);

        let samples = [0.1, 0.2, 0.3, 0.9, 1.5];
        let (h, outside) = g.histogram(&samples);
        assert_eq!(outside, 1);
        // Mass of the in-range part: 4/5.
        assert_relative_eq!(h.mass(), 0.8, max_relative = 1e-12);
    }

    #[test]
    fn smoothed_histogram_has_unit_mass() {
        let g = Arc::new(Grid::log_spaced(0.01, 10.0, 16).unwrap());
        let samples: Vec<f64> = (1..100).map(|i| i as f64 / 20.0).collect();
        let (h, _) = g.smoothed_histogram(&samples);
        assert_relative_eq!(h.mass(), 1.0, max_relative = 1e-12);
        assert!(h.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn moments_of_tabulated_density() {
        // Uniform density on [0, 1]: mean 1/2, second moment 1/3.
        let g = Arc::new(Grid::uniform(0.0, 1.0, 512).unwrap());
        let d = GridDensity::from_fn(&g, |_| 1.0);
        assert_relative_eq!(d.mass(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.mean(), 0.5, max_relative = 1e-9);
        assert_relative_eq!(d.moment(2.0), 1.0 / 3.0, max_relative = 1e-5);
    }

    #[test]
    fn transformed_grid_is_matched_cell_by_cell() {
        let g = Grid::log_spaced(1e-2, 1e2, 32).unwrap();
        let t = g.transformed(0.5).unwrap();
        assert_eq!(t.n_cells(), 32);
        let n = g.n_cells();
        for j in 0..n {
            // Transform reverses orientation: cell j in y comes from cell n-1-j in x.
            let y = crate::analytic::to_transformed(g.centers()[n - 1 - j], 0.5).unwrap();
            assert_relative_eq!(t.centers()[j], y, max_relative = 1e-12);
        }
        // delta = 0 keeps orientation.
        let t0 = g.transformed(0.0).unwrap();
        assert_relative_eq!(t0.centers()[0], g.centers()[0].ln(), max_relative = 1e-12);
    }

    #[test]
    fn auto_domain_defaults_and_widening() {
        // mu = 2 >= 1.5: defaults suffice.
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let (lo, hi) = Grid::auto_domain(&eq, 1.0).unwrap();
        assert_relative_eq!(lo, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(hi, 1e3, max_relative = 1e-12);
        // mu close to 1 with delta = 0: tail mass beyond W decays only like
        // W^{-2.05}, leaving ~4e-7 past 1e3 — above the domain budget, so the
        // window must widen.
        let eq = AnalyticDensity::inverse_gamma_delta(1.05, 1.0, 0.0).unwrap();
        let (lo, hi) = Grid::auto_domain(&eq, 1.0).unwrap();
        assert!(hi > 1e3);
        assert!(lo < 1e-4);
    }

    #[test]
    fn l1_requires_same_grid() {
        let g1 = Arc::new(Grid::uniform(0.0, 1.0, 8).unwrap());
        let g2 = Arc::new(Grid::uniform(0.0, 1.0, 16).unwrap());
        let d1 = GridDensity::from_fn(&g1, |_| 1.0);
        let d2 = GridDensity::from_fn(&g2, |_| 1.0);
        assert!(d1.l1_distance(&d2).is_err());
        let d3 = GridDensity::from_fn(&g1, |x| 2.0 * x);
        assert!(d1.l1_distance(&d3).unwrap() > 0.0);
    }
}
