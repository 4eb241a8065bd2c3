//! Closed-form densities of the wealth-exchange models and their moments.
//!
//! The catalogue collects every stationary profile the solvers and samplers
//! refer to: the inverse-Gamma equilibrium of the linear model with kernel
//! exponent `delta`, the Gamma and inverse-Gamma equilibria of the gambling
//! models, the generalized Gamma profile obtained in the unit-diffusion
//! coordinate, and the log-coordinate equilibrium of the Maxwellian (`delta =
//! 0`) reference model.
//!
//! Moments are computed by adaptive quadrature (absolute tolerance `1e-10`,
//! domain split at the mode of the weighted integrand); closed-form mean and
//! variance are exposed separately so the two routes can check each other.
//! Divergent moments are reported through the [`Moment::Divergent`] sentinel,
//! detected from the tail exponent rather than from a failing integral.

mod potential;
mod steady;
mod transform;
mod validate;

pub use potential::{ggamma_params, rho_delta, rho_ggamma, GGammaParams, Potential};
pub use steady::SteadyProfile;
pub use transform::{from_transformed, jacobian_dy_dx, to_transformed};
pub use validate::{validate_initial_condition, ConditionCheck, DensityInput, InitialConditionReport};

use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_ABS_TOL};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

/// A possibly-divergent moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Moment {
    Finite(f64),
    Divergent,
}

impl Moment {
    /// The value, with `+inf` standing in for a divergent moment.
    pub fn value(&self) -> f64 {
        match self {
            Moment::Finite(v) => *v,
            Moment::Divergent => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Moment::Finite(v) => Some(*v),
            Moment::Divergent => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Moment::Divergent)
    }
}

/// Support of an analytic density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    PositiveHalfLine,
    RealLine,
}

/// Catalogue of closed-form densities.
///
/// Fields are public for pattern matching; use the checked constructors to
/// build values, since the evaluation routines assume the parameter
/// constraints hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AnalyticDensity {
    /// Equilibrium of the linear model with kernel exponent `delta`:
    ///
    /// ```text
    /// f(w) = (mu m)^(1+delta+mu) / Gamma(1+delta+mu)
    ///        * exp(-mu m / w) / w^(2+delta+mu)
    /// ```
    ///
    /// an inverse Gamma with shape `1 + delta + mu` and scale `mu m`.
    /// `delta = 0` gives the Maxwellian reference equilibrium.
    InverseGammaDelta { mu: f64, m: f64, delta: f64 },

    /// Equilibrium of the conservative gambling model with uniform stake
    /// split:
    ///
    /// ```text
    /// f(w) = (1-delta)^(1-delta) / Gamma(1-delta) * w^(-delta) exp(-(1-delta) w)
    /// ```
    ///
    /// a Gamma with shape and rate both `1 - delta`; unit mean. Requires
    /// `delta < 1`.
    GammaGambling { delta: f64 },

    /// Equilibrium of the mean-conserving gambling model with Beta-distributed
    /// stakes: an inverse Gamma with shape `a + delta` and scale
    /// `a + delta - 1`; unit mean. Requires `a + delta > 1`.
    InverseGammaGambling { a: f64, delta: f64 },

    /// Generalized Gamma profile in the unit-diffusion coordinate `y`:
    ///
    /// ```text
    /// h(y) = nu / (theta^kappa Gamma(kappa/nu)) * y^(kappa-1) exp(-(y/theta)^nu)
    /// ```
    GeneralizedGamma { kappa_shape: f64, theta: f64, nu: f64 },

    /// Unit-mean exponential `exp(-w)`: the underlying Gibbs profile of the
    /// conservative gambling model.
    ExpGibbs,

    /// Maxwellian-model equilibrium after the log transform `y = log x`,
    /// supported on the whole real line:
    ///
    /// ```text
    /// g(y) = (mu m)^(1+mu) / Gamma(1+mu) * exp(-((1+mu) y + mu m e^(-y)))
    /// ```
    LogTransformedDelta0 { mu: f64, m: f64 },
}

use AnalyticDensity::*;

impl AnalyticDensity {
    /// Inverse-Gamma equilibrium of the linear model. Requires `mu > 1`,
    /// `m > 0`, `0 <= delta <= 1`.
    pub fn inverse_gamma_delta(mu: f64, m: f64, delta: f64) -> Result<Self> {
        if !(mu > 1.0 && mu.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "inverse_gamma_delta needs mu > 1 for a finite mean, got mu = {mu}"
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParam(format!("m must be positive, got {m}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParam(format!(
                "delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(InverseGammaDelta { mu, m, delta })
    }

    /// Gamma equilibrium of the conservative gambling model. Requires
    /// `0 <= delta < 1` (at `delta = 1` the shape degenerates to zero).
    pub fn gamma_gambling(delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParam(format!(
                "gamma_gambling needs 0 <= delta < 1, got {delta}"
            )));
        }
        Ok(GammaGambling { delta })
    }

    /// Inverse-Gamma equilibrium of the mean-conserving gambling model.
    /// Requires `a + delta > 1` so that the scale `a + delta - 1` is positive.
    pub fn inverse_gamma_gambling(a: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParam(format!(
                "delta must lie in [0, 1], got {delta}"
            )));
        }
        if !(a + delta > 1.0) {
            return Err(Error::InvalidParam(format!(
                "inverse_gamma_gambling needs a + delta > 1, got a + delta = {}",
                a + delta
            )));
        }
        Ok(InverseGammaGambling { a, delta })
    }

    /// Generalized Gamma density; all three parameters must be positive.
    pub fn generalized_gamma(kappa_shape: f64, theta: f64, nu: f64) -> Result<Self> {
        for (name, v) in [("kappa_shape", kappa_shape), ("theta", theta), ("nu", nu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(GeneralizedGamma {
            kappa_shape,
            theta,
            nu,
        })
    }

    pub fn exp_gibbs() -> Self {
        ExpGibbs
    }

    /// Log-coordinate Maxwellian equilibrium. Requires `mu > 0`, `m > 0`.
    pub fn log_transformed_delta0(mu: f64, m: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "mu must be positive, got {mu}"
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParam(format!("m must be positive, got {m}")));
        }
        Ok(LogTransformedDelta0 { mu, m })
    }

    pub fn support(&self) -> Support {
        match self {
            LogTransformedDelta0 { .. } => Support::RealLine,
            _ => Support::PositiveHalfLine,
        }
    }

    fn in_support(&self, w: f64) -> bool {
        match self.support() {
            Support::PositiveHalfLine => w > 0.0,
            Support::RealLine => w.is_finite(),
        }
    }

    /// Natural log of the density. Errors outside the support.
    pub fn ln_pdf(&self, w: f64) -> Result<f64> {
        if !self.in_support(w) {
            return Err(Error::InvalidParam(format!(
                "point {w} outside the support of {}",
                self.name()
            )));
        }
        Ok(self.ln_pdf_unchecked(w))
    }

    /// Density value. Errors outside the support.
    pub fn pdf(&self, w: f64) -> Result<f64> {
        self.ln_pdf(w).map(f64::exp)
    }

    /// Log-density without the support check; callers must guarantee `w` is
    /// interior. Used in quadrature loops and grid tabulation.
    pub fn ln_pdf_unchecked(&self, w: f64) -> f64 {
        match *self {
            InverseGammaDelta { mu, m, delta } => {
                let shape = 1.0 + delta + mu;
                let scale = mu * m;
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * w.ln() - scale / w
            }
            GammaGambling { delta } => {
                let k = 1.0 - delta;
                k * k.ln() - ln_gamma(k) - delta * w.ln() - k * w
            }
            InverseGammaGambling { a, delta } => {
                let shape = a + delta;
                let scale = a + delta - 1.0;
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * w.ln() - scale / w
            }
            GeneralizedGamma {
                kappa_shape,
                theta,
                nu,
            } => {
                nu.ln() - kappa_shape * theta.ln() - ln_gamma(kappa_shape / nu)
                    + (kappa_shape - 1.0) * w.ln()
                    - (w / theta).powf(nu)
            }
            ExpGibbs => -w,
            LogTransformedDelta0 { mu, m } => {
                let scale = mu * m;
                (1.0 + mu) * scale.ln() - ln_gamma(1.0 + mu) - (1.0 + mu) * w - scale * (-w).exp()
            }
        }
    }

    /// Moment `E[w^order]` by adaptive quadrature; divergent moments are
    /// detected from the tail exponent and reported as a sentinel rather than
    /// integrated.
    pub fn moment(&self, order: f64) -> Result<Moment> {
        if !order.is_finite() {
            return Err(Error::InvalidParam(format!(
                "moment order must be finite, got {order}"
            )));
        }
        if !self.moment_is_finite(order) {
            return Ok(Moment::Divergent);
        }
        let tol = DEFAULT_ABS_TOL;
        let value = match self.support() {
            Support::PositiveHalfLine => {
                let f = |w: f64| self.ln_pdf_unchecked(w).exp() * w.powf(order);
                quadrature::integrate_split(f, 0.0, None, &self.moment_splits(order), tol)?
                    .value
            }
            Support::RealLine => {
                if order.fract() != 0.0 {
                    return Err(Error::InvalidParam(format!(
                        "non-integer moment order {order} undefined on real-line support"
                    )));
                }
                let f = |y: f64| self.ln_pdf_unchecked(y).exp() * y.powi(order as i32);
                let split = self.moment_splits(order)[0];
                let lower = quadrature::integrate_lower_half_line(f, split, 0.5 * tol)?;
                let upper = quadrature::integrate_half_line(f, split, 0.5 * tol)?;
                lower.value + upper.value
            }
        };
        Ok(Moment::Finite(value))
    }

    /// Moments for several orders at once.
    pub fn moments(&self, orders: &[f64]) -> Result<Vec<Moment>> {
        orders.iter().map(|&q| self.moment(q)).collect()
    }

    /// Whether `E[w^order]` is finite, from the power behaviour at the ends of
    /// the support.
    pub fn moment_is_finite(&self, order: f64) -> bool {
        match *self {
            // Inverse-Gamma tail w^{-(shape+1)}: finite iff order < shape.
            InverseGammaDelta { mu, delta, .. } => order < 1.0 + delta + mu,
            InverseGammaGambling { a, delta } => order < a + delta,
            // Exponential tails: only the origin can obstruct.
            GammaGambling { delta } => order > -(1.0 - delta),
            GeneralizedGamma { kappa_shape, .. } => order > -kappa_shape,
            ExpGibbs => order > -1.0,
            LogTransformedDelta0 { .. } => true,
        }
    }

    /// Closed-form mean, used to cross-check the quadrature route.
    pub fn mean(&self) -> Moment {
        match *self {
            InverseGammaDelta { mu, m, delta } => {
                // mu m / (delta + mu), finite because mu > 1.
                Moment::Finite(mu * m / (delta + mu))
            }
            GammaGambling { .. } => Moment::Finite(1.0),
            InverseGammaGambling { .. } => Moment::Finite(1.0),
            GeneralizedGamma {
                kappa_shape,
                theta,
                nu,
            } => Moment::Finite(generalized_gamma_raw_moment(kappa_shape, theta, nu, 1.0)),
            ExpGibbs => Moment::Finite(1.0),
            LogTransformedDelta0 { mu, m } => {
                // y = log(mu m / u) with u ~ Gamma(1+mu, 1).
                Moment::Finite((mu * m).ln() - digamma(1.0 + mu))
            }
        }
    }

    /// Closed-form variance.
    pub fn variance(&self) -> Moment {
        match *self {
            InverseGammaDelta { mu, m, delta } => {
                let s = delta + mu;
                if s > 1.0 {
                    Moment::Finite((mu * m).powi(2) / (s * s * (s - 1.0)))
                } else {
                    Moment::Divergent
                }
            }
            GammaGambling { delta } => Moment::Finite(1.0 / (1.0 - delta)),
            InverseGammaGambling { a, delta } => {
                if a + delta > 2.0 {
                    Moment::Finite(1.0 / (a + delta - 2.0))
                } else {
                    Moment::Divergent
                }
            }
            GeneralizedGamma {
                kappa_shape,
                theta,
                nu,
            } => {
                let m1 = generalized_gamma_raw_moment(kappa_shape, theta, nu, 1.0);
                let m2 = generalized_gamma_raw_moment(kappa_shape, theta, nu, 2.0);
                Moment::Finite(m2 - m1 * m1)
            }
            ExpGibbs => Moment::Finite(1.0),
            LogTransformedDelta0 { mu, .. } => Moment::Finite(trigamma(1.0 + mu)),
        }
    }

    /// Interior points where the integrand `w^order * pdf` peaks; handed to
    /// the quadrature as initial split points.
    fn moment_splits(&self, order: f64) -> Vec<f64> {
        match *self {
            InverseGammaDelta { mu, m, delta } => {
                let shape = 1.0 + delta + mu;
                let scale = mu * m;
                inverse_gamma_splits(shape, scale, order)
            }
            InverseGammaGambling { a, delta } => {
                inverse_gamma_splits(a + delta, a + delta - 1.0, order)
            }
            GammaGambling { delta } => gamma_splits(1.0 - delta, 1.0 - delta, order),
            GeneralizedGamma {
                kappa_shape,
                theta,
                nu,
            } => {
                // Mode of y^{order} h(y): theta * ((kappa-1+order)/nu)^{1/nu}.
                let eff = kappa_shape - 1.0 + order;
                let mode = if eff > 0.0 {
                    theta * (eff / nu).powf(1.0 / nu)
                } else {
                    0.5 * theta
                };
                vec![mode, theta]
            }
            ExpGibbs => vec![order.max(0.5), 1.0],
            LogTransformedDelta0 { mu, m } => {
                // Mode of g: (1+mu) = mu m e^{-y}  =>  y = log(mu m / (1+mu)).
                vec![(mu * m / (1.0 + mu)).ln()]
            }
        }
    }

    /// Short human-readable name for error messages.
    pub fn name(&self) -> &'static str {
        match self {
            InverseGammaDelta { .. } => "InverseGammaDelta",
            GammaGambling { .. } => "GammaGambling",
            InverseGammaGambling { .. } => "InverseGammaGambling",
            GeneralizedGamma { .. } => "GeneralizedGamma",
            ExpGibbs => "ExpGibbs",
            LogTransformedDelta0 { .. } => "LogTransformedDelta0",
        }
    }

    /// Mass outside `[lo, hi]`, by quadrature of both tails. Used by grid
    /// coverage checks.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> Result<f64> {
        match self.support() {
            Support::PositiveHalfLine => {
                let f = |w: f64| self.ln_pdf_unchecked(w).exp();
                let below = if lo > 0.0 {
                    quadrature::integrate(f, 0.0, lo, 1e-12)?.value
                } else {
                    0.0
                };
                let above = quadrature::integrate_half_line(f, hi, 1e-12)?.value;
                Ok(below + above)
            }
            Support::RealLine => {
                let f = |y: f64| self.ln_pdf_unchecked(y).exp();
                let below = quadrature::integrate_lower_half_line(&f, lo, 1e-12)?.value;
                let above = quadrature::integrate_half_line(&f, hi, 1e-12)?.value;
                Ok(below + above)
            }
        }
    }
}

/// Raw moment of the generalized Gamma: theta^s Gamma((kappa+s)/nu) / Gamma(kappa/nu).
fn generalized_gamma_raw_moment(kappa: f64, theta: f64, nu: f64, s: f64) -> f64 {
    (s * theta.ln() + ln_gamma((kappa + s) / nu) - ln_gamma(kappa / nu)).exp()
}

/// Closed-form moment `E[W^order]` of an inverse Gamma with the given shape
/// and scale: `scale^order Gamma(shape - order) / Gamma(shape)`, finite iff
/// `order < shape`. Exact counterpart of the quadrature route, used for time
/// normalization constants and effective-mean oracles.
pub fn inverse_gamma_moment_closed(shape: f64, scale: f64, order: f64) -> Result<Moment> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::InvalidParam(format!(
            "inverse Gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    if order >= shape {
        return Ok(Moment::Divergent);
    }
    Ok(Moment::Finite(
        (order * scale.ln() + ln_gamma(shape - order) - ln_gamma(shape)).exp(),
    ))
}

fn inverse_gamma_splits(shape: f64, scale: f64, order: f64) -> Vec<f64> {
    // Mode of w^order * invgamma(shape, scale): scale / (shape + 1 - order).
    let denom = shape + 1.0 - order;
    let mode = if denom > 0.0 {
        scale / denom
    } else {
        scale
    };
    vec![mode, scale / (shape + 1.0), scale]
}

fn gamma_splits(shape: f64, rate: f64, order: f64) -> Vec<f64> {
    let eff = shape + order - 1.0;
    let mode = if eff > 0.0 { eff / rate } else { 0.25 / rate };
    vec![mode, shape / rate]
}

/// Trigamma function psi'(x) for x > 0: recurrence into the asymptotic range.
fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic series 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7)
    // - 1/(30x^9) + 5/(66x^11); the first omitted term is below 3e-15 at
    // x >= 12.
    acc + inv
        * (1.0
            + inv
                * (0.5
                    + inv * (1.0 / 6.0
                        + inv2
                            * (-1.0 / 30.0
                                + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * 5.0 / 66.0))))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn maxwellian_equilibrium_value_at_one() {
        // f(1) = (mu m)^(1+mu)/Gamma(1+mu) * e^{-mu m} with mu = 2, m = 1:
        // 2^3 / Gamma(3) * e^{-2} = 4 e^{-2}.
        let d = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(d.pdf(1.0).unwrap(), 4.0 * (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn inverse_gamma_delta_moments_match_closed_form() {
        let d = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        // mean = mu m/(delta+mu) = 2/3, var = (mu m)^2/((delta+mu)^2 (delta+mu-1)) = 2/9.
        assert_relative_eq!(d.mean().value(), 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(d.variance().value(), 2.0 / 9.0, max_relative = 1e-15);
        let m0 = d.moment(0.0).unwrap().value();
        let m1 = d.moment(1.0).unwrap().value();
        let m2 = d.moment(2.0).unwrap().value();
        assert_relative_eq!(m0, 1.0, max_relative = 1e-9);
        assert_relative_eq!(m1, 2.0 / 3.0, max_relative = 1e-9);
        assert_relative_eq!(m2 - m1 * m1, 2.0 / 9.0, max_relative = 1e-8);
    }

    #[test]
    fn divergent_moment_sentinel() {
        // shape = 1 + delta + mu = 4: fourth moment diverges.
        let d = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        assert!(d.moment(4.0).unwrap().is_divergent());
        assert!(d.moment(4.5).unwrap().is_divergent());
        assert!(!d.moment(3.0).unwrap().is_divergent());
        assert_eq!(d.moment(4.0).unwrap().value(), f64::INFINITY);
    }

    #[test]
    fn gamma_gambling_near_origin_and_variance() {
        // delta = 1/2: f(w) w^{1/2} -> (1/2)^{1/2}/Gamma(1/2) = 1/sqrt(2 pi).
        let d = AnalyticDensity::gamma_gambling(0.5).unwrap();
        let w = 1e-9;
        let prefactor = d.pdf(w).unwrap() * w.sqrt();
        assert_relative_eq!(
            prefactor,
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            max_relative = 1e-8
        );
        assert_relative_eq!(d.variance().value(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(d.moment(1.0).unwrap().value(), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn gamma_gambling_delta_one_rejected() {
        assert!(AnalyticDensity::gamma_gambling(1.0).is_err());
    }

    #[test]
    fn inverse_gamma_gambling_unit_mean_and_variance() {
        let d = AnalyticDensity::inverse_gamma_gambling(3.0, 1.0).unwrap();
        assert_relative_eq!(d.mean().value(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(d.variance().value(), 0.5, max_relative = 1e-15);
        let m1 = d.moment(1.0).unwrap().value();
        assert_relative_eq!(m1, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn inverse_gamma_gambling_invalid_params() {
        // a + delta <= 1: not normalizable with positive scale.
        assert!(AnalyticDensity::inverse_gamma_gambling(0.5, 0.25).is_err());
        assert!(AnalyticDensity::inverse_gamma_gambling(-1.0, 0.5).is_err());
    }

    #[test]
    fn exp_gibbs_is_unit_exponential() {
        let d = AnalyticDensity::exp_gibbs();
        assert_relative_eq!(d.pdf(0.5).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(d.moment(1.0).unwrap().value(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(d.moment(2.0).unwrap().value(), 2.0, max_relative = 1e-9);
    }

    #[test]
    fn log_transformed_delta0_normalizes() {
        let d = AnalyticDensity::log_transformed_delta0(2.0, 1.0).unwrap();
        assert_relative_eq!(d.moment(0.0).unwrap().value(), 1.0, max_relative = 1e-9);
        // Mean: log(mu m) - digamma(1 + mu).
        let quad_mean = d.moment(1.0).unwrap().value();
        assert_relative_eq!(quad_mean, d.mean().value(), max_relative = 1e-7);
        // Variance: trigamma(1 + mu), against the quadrature route.
        let m2 = d.moment(2.0).unwrap().value();
        assert_relative_eq!(m2 - quad_mean * quad_mean, d.variance().value(), epsilon = 1e-7);
    }

    #[test]
    fn generalized_gamma_moments() {
        let d = AnalyticDensity::generalized_gamma(8.0, 2.0f64.sqrt(), 2.0).unwrap();
        let m1 = d.moment(1.0).unwrap().value();
        assert_relative_eq!(m1, d.mean().value(), max_relative = 1e-9);
        let m2 = d.moment(2.0).unwrap().value();
        assert_relative_eq!(m2 - m1 * m1, d.variance().value(), max_relative = 1e-7);
    }

    #[test]
    fn pdf_outside_support_errors() {
        let d = AnalyticDensity::gamma_gambling(0.5).unwrap();
        assert!(d.pdf(0.0).is_err());
        assert!(d.pdf(-1.0).is_err());
        // Real-line support accepts negatives.
        let g = AnalyticDensity::log_transformed_delta0(2.0, 1.0).unwrap();
        assert!(g.pdf(-3.0).is_ok());
    }

    #[test]
    fn mass_outside_default_domain_is_small() {
        let d = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 1.0).unwrap();
        let out = d.mass_outside(1e-4, 1e3).unwrap();
        assert!(out < 1e-8, "mass outside = {out:e}");
    }

    #[test]
    fn closed_form_inverse_gamma_moment_matches_quadrature() {
        // Equilibrium with mu = 2, m = 1, delta = 0.5: shape 3.5, scale 2.
        let d = AnalyticDensity::inverse_gamma_delta(2.0, 1.0, 0.5).unwrap();
        for order in [0.5, 1.0, 1.5, 2.0] {
            let closed = inverse_gamma_moment_closed(3.5, 2.0, order)
                .unwrap()
                .value();
            let quad = d.moment(order).unwrap().value();
            assert_relative_eq!(closed, quad, max_relative = 1e-8);
        }
        assert!(inverse_gamma_moment_closed(3.5, 2.0, 3.5)
            .unwrap()
            .is_divergent());
        assert!(inverse_gamma_moment_closed(3.5, 2.0, 4.0)
            .unwrap()
            .is_divergent());
    }

    #[test]
    fn trigamma_against_known_values() {
        // psi'(1) = pi^2/6.
        assert_relative_eq!(
            super::trigamma(1.0),
            std::f64::consts::PI * std::f64::consts::PI / 6.0,
            max_relative = 1e-12
        );
        // psi'(3) = pi^2/6 - 5/4.
        assert_relative_eq!(
            super::trigamma(3.0),
            std::f64::consts::PI * std::f64::consts::PI / 6.0 - 1.25,
            max_relative = 1e-12
        );
    }
}
