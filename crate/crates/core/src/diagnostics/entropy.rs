//! Relative entropy, weighted Fisher information, and derived functionals.
//!
//! The dissipation identity for the ratio-form Fokker-Planck equation reads
//!
//! ```text
//! d/dt H(f | g) = -I_delta(f | g),
//! I_delta(f | g) = integral of w^{2+delta} f (d/dw ln(f/g))^2 dw,
//! ```
//!
//! and `w^{2+delta}` is exactly the squared inverse Jacobian of the
//! unit-diffusion transform, so the same functional evaluated in transformed
//! coordinates carries weight 1. The log-Sobolev inequality bounds
//! `I_delta >= 2 rho H`, which the reports expose as `lsi_ratio = 2 rho H /
//! I_delta <= 1`, and Csiszar-Kullback as `ck_gap = 2 H - l1^2 >= 0`.
//!
//! Cells holding less than [`ENTROPY_FLOOR`] are treated as empty. In the
//! grid-grid variant, `f`-mass sitting where the reference is empty is an
//! absolute-continuity violation and errors once it exceeds
//! [`ABS_CONTINUITY_TOL`]; the analytic variants work from log-densities and
//! never underflow.

use crate::analytic::AnalyticDensity;
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use serde::Serialize;

/// Values at or below this are treated as an empty cell.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Maximum `f`-mass tolerated on cells where the reference density vanishes.
pub const ABS_CONTINUITY_TOL: f64 = 1e-6;

/// Entropy functionals of a density against a reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyReport {
    /// Relative entropy `H(f | g)`.
    #[serde(rename = "H")]
    pub relative_entropy: f64,
    /// Classical (weight-1) relative Fisher information.
    #[serde(rename = "I")]
    pub fisher_unweighted: f64,
    /// Weighted Fisher information `I_delta(f | g)`; equals `I` in the
    /// unit-diffusion coordinate, where the weight is identically 1.
    #[serde(rename = "I_delta")]
    pub fisher: f64,
    /// `2 rho H / I_delta`; `None` without a convexity constant or when the
    /// Fisher information vanishes.
    pub lsi_ratio: Option<f64>,
    /// Csiszar-Kullback gap `2 H - l1^2`.
    pub ck_gap: f64,
    /// `L1` distance to the reference, including reference mass outside the
    /// grid when the reference is analytic.
    #[serde(rename = "l1")]
    pub l1_to_reference: f64,
}

/// Relative entropy between two densities on the same grid.
pub fn relative_entropy_grid(f: &GridDensity, g: &GridDensity) -> Result<f64> {
    f.check_same_grid(g)?;
    let widths = f.grid.widths();
    let mut h = 0.0;
    let mut excluded = 0.0;
    for i in 0..f.values.len() {
        let fi = f.values[i];
        if fi <= ENTROPY_FLOOR {
            continue;
        }
        let gi = g.values[i];
        if gi <= ENTROPY_FLOOR {
            excluded += fi * widths[i];
            continue;
        }
        h += fi * (fi.ln() - gi.ln()) * widths[i];
    }
    if excluded > ABS_CONTINUITY_TOL {
        return Err(Error::AbsoluteContinuity { mass: excluded });
    }
    Ok(h)
}

/// Relative entropy between two analytic densities on the same support, by
/// adaptive quadrature of `f ln(f/g)` at absolute tolerance `1e-10`.
pub fn relative_entropy_analytic(f: &AnalyticDensity, g: &AnalyticDensity) -> Result<f64> {
    use crate::analytic::Support;
    if f.support() != g.support() {
        return Err(Error::InvalidParam(format!(
            "relative entropy needs a common support, got {} vs {}",
            f.name(),
            g.name()
        )));
    }
    let tol = 1e-10;
    let integrand = |w: f64| {
        let lf = f.ln_pdf_unchecked(w);
        lf.exp() * (lf - g.ln_pdf_unchecked(w))
    };
    match f.support() {
        Support::PositiveHalfLine => {
            let scale = f.mean().finite().unwrap_or(1.0);
            let splits = [0.5 * scale, scale, 2.0 * scale];
            Ok(crate::quadrature::integrate_split(integrand, 0.0, None, &splits, tol)?.value)
        }
        Support::RealLine => {
            let split = f.mean().finite().unwrap_or(0.0);
            let lower = crate::quadrature::integrate_lower_half_line(&integrand, split, 0.5 * tol)?;
            let upper = crate::quadrature::integrate_half_line(&integrand, split, 0.5 * tol)?;
            Ok(lower.value + upper.value)
        }
    }
}

/// Weighted relative Fisher information `I_delta(f | g)` between two grid
/// densities: `sum w^(2+delta) (f/|f|) (d/dw ln(f/g))^2 width`.
///
/// `f` is normalized by its own grid mass and the log-ratio derivative is
/// scale-free, so the value is invariant under rescaling either argument by a
/// positive constant. Derivatives are centered on interior cells and one-sided
/// at the ends and across empty-cell breaks, as in [`entropy_report`].
pub fn fisher_weighted(f: &GridDensity, g: &GridDensity, delta: f64) -> Result<f64> {
    f.check_same_grid(g)?;
    let mass = f.mass();
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::NotADensity(format!(
            "fisher_weighted needs positive finite f-mass, got {mass}"
        )));
    }
    let c = f.grid.centers();
    let widths = f.grid.widths();
    let n = f.values.len();
    let mut ln_ratio: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut excluded = 0.0;
    for i in 0..n {
        let (fi, gi) = (f.values[i], g.values[i]);
        if fi <= ENTROPY_FLOOR {
            ln_ratio.push(None);
        } else if gi <= ENTROPY_FLOOR {
            excluded += fi * widths[i] / mass;
            ln_ratio.push(None);
        } else {
            ln_ratio.push(Some(fi.ln() - gi.ln()));
        }
    }
    if excluded > ABS_CONTINUITY_TOL {
        return Err(Error::AbsoluteContinuity { mass: excluded });
    }
    let mut fisher = 0.0;
    for i in 0..n {
        let Some(ri) = ln_ratio[i] else { continue };
        let left = if i > 0 { ln_ratio[i - 1] } else { None };
        let right = if i + 1 < n { ln_ratio[i + 1] } else { None };
        let slope = match (left, right) {
            (Some(rl), Some(rr)) => (rr - rl) / (c[i + 1] - c[i - 1]),
            (None, Some(rr)) => (rr - ri) / (c[i + 1] - c[i]),
            (Some(rl), None) => (ri - rl) / (c[i] - c[i - 1]),
            (None, None) => continue,
        };
        fisher += c[i].powf(2.0 + delta) * (f.values[i] / mass) * slope * slope * widths[i];
    }
    Ok(fisher)
}

/// Entropy report of `f` against a reference given by its log-density, with
/// an arbitrary Fisher weight `a(w)`.
///
/// The log-ratio derivative uses centered differences on interior cells and
/// one-sided differences at the grid ends and wherever an empty cell breaks
/// the stencil. `l1_to_reference` covers the grid only; the analytic wrappers
/// add the reference mass beyond the grid.
pub fn entropy_report(
    f: &GridDensity,
    ln_g: impl Fn(f64) -> f64,
    weight: impl Fn(f64) -> f64,
    rho: Option<f64>,
) -> EntropyReport {
    let c = f.grid.centers();
    let widths = f.grid.widths();
    let n = f.values.len();

    let mut ln_ratio: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut h = 0.0;
    let mut l1 = 0.0;
    for i in 0..n {
        let fi = f.values[i];
        let lg = ln_g(c[i]);
        l1 += (fi - lg.exp()).abs() * widths[i];
        if fi > ENTROPY_FLOOR {
            let r = fi.ln() - lg;
            h += fi * r * widths[i];
            ln_ratio.push(Some(r));
        } else {
            ln_ratio.push(None);
        }
    }

    let mut fisher = 0.0;
    let mut fisher_unweighted = 0.0;
    for i in 0..n {
        let Some(ri) = ln_ratio[i] else { continue };
        let left = if i > 0 { ln_ratio[i - 1] } else { None };
        let right = if i + 1 < n { ln_ratio[i + 1] } else { None };
        let slope = match (left, right) {
            (Some(rl), Some(rr)) => (rr - rl) / (c[i + 1] - c[i - 1]),
            (None, Some(rr)) => (rr - ri) / (c[i + 1] - c[i]),
            (Some(rl), None) => (ri - rl) / (c[i] - c[i - 1]),
            (None, None) => continue,
        };
        let cell = f.values[i] * slope * slope * widths[i];
        fisher += weight(c[i]) * cell;
        fisher_unweighted += cell;
    }

    EntropyReport {
        relative_entropy: h,
        fisher_unweighted,
        fisher,
        lsi_ratio: rho.and_then(|r| (fisher > 0.0).then(|| 2.0 * r * h / fisher)),
        ck_gap: 2.0 * h - l1 * l1,
        l1_to_reference: l1,
    }
}

/// Report against an analytic reference in the original wealth coordinate;
/// Fisher weight `w^{2+delta}`, `L1` completed with the reference mass
/// outside the grid.
pub fn entropy_report_vs_analytic(
    f: &GridDensity,
    g: &AnalyticDensity,
    delta: f64,
    rho: Option<f64>,
) -> Result<EntropyReport> {
    let mut report = entropy_report(
        f,
        |w| g.ln_pdf_unchecked(w),
        |w| w.powf(2.0 + delta),
        rho,
    );
    let outside = g.mass_outside(f.grid.lo(), f.grid.hi())?;
    report.l1_to_reference += outside;
    report.ck_gap = 2.0 * report.relative_entropy - report.l1_to_reference.powi(2);
    Ok(report)
}

/// Report in the unit-diffusion coordinate: Fisher weight 1.
pub fn entropy_report_transformed(
    f: &GridDensity,
    g: &AnalyticDensity,
    rho: Option<f64>,
) -> Result<EntropyReport> {
    let mut report = entropy_report(f, |y| g.ln_pdf_unchecked(y), |_| 1.0, rho);
    let outside = g.mass_outside(f.grid.lo(), f.grid.hi())?;
    report.l1_to_reference += outside;
    report.ck_gap = 2.0 * report.relative_entropy - report.l1_to_reference.powi(2);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::quadrature;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn entropy_of_density_against_itself_vanishes() {
        let grid = Arc::new(Grid::log_spaced(1e-3, 1e2, 64).unwrap());
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 0.5).unwrap();
        let g = GridDensity::from_analytic_normalized(&grid, &eq).unwrap();
        assert_eq!(relative_entropy_grid(&g, &g).unwrap(), 0.0);
        let report = entropy_report(&g, |w| g.values[grid.locate(w).unwrap()].ln(), |_| 1.0, None);
        assert_eq!(report.relative_entropy, 0.0);
        assert_eq!(report.fisher, 0.0);
        // The report takes ln g and exponentiates internally, so the L1 term
        // picks up one exp(ln(.)) rounding per cell.
        assert!(report.l1_to_reference.abs() < 1e-15);
    }

    #[test]
    fn discrete_relative_entropy_is_nonnegative() {
        // Two normalized densities on the same grid: KL >= 0 by Jensen.
        let grid = Arc::new(Grid::uniform(0.0, 2.0, 40).unwrap());
        let mut f = GridDensity::from_fn(&grid, |w| 1.0 + 0.8 * (3.0 * w).sin().powi(2));
        let mut g = GridDensity::from_fn(&grid, |w| 0.2 + w);
        f.normalize().unwrap();
        g.normalize().unwrap();
        let h = relative_entropy_grid(&f, &g).unwrap();
        assert!(h > 0.0);
        // Csiszar-Kullback on the same pair through the report path.
        let report = entropy_report(&f, |w| g.values[grid.locate(w.min(1.999)).unwrap()].ln(), |_| 1.0, None);
        assert!(report.ck_gap >= 0.0, "ck gap {}", report.ck_gap);
    }

    #[test]
    fn sampled_equilibrium_is_close_to_analytic_reference() {
        let grid = Arc::new(Grid::log_spaced(1e-4, 1e3, 800).unwrap());
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let f = GridDensity::from_analytic_normalized(&grid, &eq).unwrap();
        let report = entropy_report_vs_analytic(&f, &eq, 1.0, None).unwrap();
        assert!(report.relative_entropy.abs() < 1e-3, "H = {}", report.relative_entropy);
        assert!(report.l1_to_reference < 1e-3, "l1 = {}", report.l1_to_reference);
        // The normalization offset is flat, so the Fisher information is tiny.
        assert!(report.fisher < 1e-6, "I = {}", report.fisher);
    }

    #[test]
    fn fisher_information_matches_quadrature_oracle() {
        // f = psi g / Z with psi(w) = 1 + 0.5 exp(-(ln w)^2 / 2). The exact
        // Fisher information with weight w^{2+delta} is
        // (1/Z) int w^{2+delta} g psi (psi'/psi)^2 dw.
        let delta = 1.0;
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, delta).unwrap();
        let psi = |w: f64| 1.0 + 0.5 * (-0.5 * w.ln().powi(2)).exp();
        let dpsi = |w: f64| 0.5 * (-0.5 * w.ln().powi(2)).exp() * (-w.ln()) / w;
        let gpdf = |w: f64| eq.ln_pdf_unchecked(w).exp();
        let z = quadrature::integrate_split(|w| gpdf(w) * psi(w), 0.0, None, &[0.5, 1.0, 5.0], 1e-12)
            .unwrap()
            .value;
        let i_exact = quadrature::integrate_split(
            |w| w.powf(2.0 + delta) * gpdf(w) * dpsi(w).powi(2) / psi(w),
            0.0,
            None,
            &[0.5, 1.0, 5.0],
            1e-12,
        )
        .unwrap()
        .value
            / z;

        let grid = Arc::new(Grid::log_spaced(1e-4, 1e3, 4096).unwrap());
        let mut f = GridDensity::from_fn(&grid, |w| gpdf(w) * psi(w));
        f.normalize().unwrap();
        let report = entropy_report_vs_analytic(&f, &eq, delta, None).unwrap();
        assert_relative_eq!(report.fisher, i_exact, max_relative = 2e-3);
        // The classical (weight-1) Fisher information against its own oracle.
        let i_plain_exact = quadrature::integrate_split(
            |w| gpdf(w) * dpsi(w).powi(2) / psi(w),
            0.0,
            None,
            &[0.5, 1.0, 5.0],
            1e-12,
        )
        .unwrap()
        .value
            / z;
        assert_relative_eq!(report.fisher_unweighted, i_plain_exact, max_relative = 2e-3);
        // H also against quadrature: (1/Z) int g psi ln(psi/Z).
        let h_exact = quadrature::integrate_split(
            |w| gpdf(w) * psi(w) * psi(w).ln(),
            0.0,
            None,
            &[0.5, 1.0, 5.0],
            1e-12,
        )
        .unwrap()
        .value
            / z
            - z.ln();
        assert_relative_eq!(report.relative_entropy, h_exact, max_relative = 2e-3);
    }

    #[test]
    fn analytic_relative_entropy_matches_closed_form() {
        use statrs::function::gamma::{digamma, ln_gamma};
        let f = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let g = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 0.5).unwrap();
        let h = relative_entropy_analytic(&f, &g).unwrap();
        // Both are inverse Gammas with scale 2, shapes 4 and 3.5; the log
        // ratio is affine in ln w, so with E_f[ln w] = ln 2 - digamma(4):
        // H = ln Gamma(3.5) - ln Gamma(4) + digamma(4)/2.
        let exact = ln_gamma(3.5) - ln_gamma(4.0) + 0.5 * digamma(4.0);
        assert_relative_eq!(h, exact, max_relative = 1e-8);
        assert!(h > 0.0);
        assert!(relative_entropy_analytic(&f, &f).unwrap().abs() < 1e-12);
        // Mismatched supports are rejected.
        let y = AnalyticDensity::log_transformed_delta0(2.0, 1.0).unwrap();
        assert!(relative_entropy_analytic(&f, &y).is_err());
    }

    #[test]
    fn fisher_weighted_grid_route_matches_report_and_scaling() {
        let grid = Arc::new(Grid::log_spaced(1e-4, 1e3, 1024).unwrap());
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let mut f = GridDensity::from_fn(&grid, |w| {
            eq.ln_pdf_unchecked(w).exp() * (1.0 + 0.4 * (-(w - 1.0).powi(2)).exp())
        });
        f.normalize().unwrap();
        let g_tab = GridDensity::from_fn(&grid, |w| eq.ln_pdf_unchecked(w).exp());
        let direct = fisher_weighted(&f, &g_tab, 1.0).unwrap();
        let report = entropy_report_vs_analytic(&f, &eq, 1.0, None).unwrap();
        assert_relative_eq!(direct, report.fisher, max_relative = 1e-12);
        // Invariant under rescaling either argument by a positive constant.
        let mut f2 = f.clone();
        for v in &mut f2.values {
            *v *= 7.25;
        }
        let mut g2 = g_tab.clone();
        for v in &mut g2.values {
            *v *= 0.04;
        }
        let scaled = fisher_weighted(&f2, &g2, 1.0).unwrap();
        assert_relative_eq!(scaled, direct, max_relative = 1e-12);
    }

    #[test]
    fn mass_on_empty_reference_cells_errors() {
        let grid = Arc::new(Grid::uniform(0.0, 2.0, 20).unwrap());
        let mut f = GridDensity::from_fn(&grid, |_| 1.0);
        f.normalize().unwrap();
        let mut g = GridDensity::from_fn(&grid, |w| if w < 1.0 { 1.0 } else { 0.0 });
        g.normalize().unwrap();
        let err = relative_entropy_grid(&f, &g).unwrap_err();
        match err {
            Error::AbsoluteContinuity { mass } => assert!((mass - 0.5).abs() < 1e-12),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn lsi_ratio_present_only_with_rho_and_positive_fisher() {
        let grid = Arc::new(Grid::log_spaced(1e-3, 1e2, 256).unwrap());
        let eq = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let mut f = GridDensity::from_fn(&grid, |w| {
            eq.ln_pdf_unchecked(w).exp() * (1.0 + 0.4 * (-(w - 1.0).powi(2)).exp())
        });
        f.normalize().unwrap();
        let with_rho = entropy_report_vs_analytic(&f, &eq, 1.0, Some(1.0)).unwrap();
        assert!(with_rho.lsi_ratio.is_some());
        assert!(with_rho.lsi_ratio.unwrap() > 0.0);
        let without = entropy_report_vs_analytic(&f, &eq, 1.0, None).unwrap();
        assert!(without.lsi_ratio.is_none());
    }
}
