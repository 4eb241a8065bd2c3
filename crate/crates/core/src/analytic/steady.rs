//! Stationary profile of a drift-diffusion operator from its coefficients.
//!
//! For the one-dimensional operator `d/dx [ a(x) d f/dx + b(x) f ]` a
//! stationary no-flux profile satisfies `a f' + b f = 0`, i.e.
//!
//! ```text
//! f(x) = C / a(x) * exp( -int_{x0}^{x} b(s)/a(s) ds ) * a(x0)-normalization
//! ```
//!
//! written here as `f = C a^{-1} Psi^{-1}` with `Psi(x) = exp(int_{x0}^x b/a)`.
//! The integral is evaluated by adaptive quadrature from the anchor `x0`, with
//! memoized checkpoints so repeated evaluations stay cheap.

use crate::error::{Error, Result};
use crate::quadrature;
use std::cell::RefCell;

/// Unnormalized stationary profile built from coefficient callables.
pub struct SteadyProfile<A, B>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    a: A,
    b: B,
    tol: f64,
    /// Sorted checkpoints (x, int_{x0}^{x} b/a) reused as quadrature anchors.
    checkpoints: RefCell<Vec<(f64, f64)>>,
}

impl<A, B> SteadyProfile<A, B>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    /// Builds the profile anchored at `x0` (where `Psi = 1`). The diffusion
    /// coefficient must be strictly positive at `x0`.
    pub fn new(a: A, b: B, x0: f64, tol: f64) -> Result<Self> {
        if !(x0.is_finite() && tol > 0.0) {
            return Err(Error::InvalidParam(format!(
                "steady profile needs finite x0 and positive tolerance, got ({x0}, {tol})"
            )));
        }
        if !(a(x0) > 0.0) {
            return Err(Error::InvalidParam(format!(
                "diffusion coefficient must be positive at the anchor, a({x0}) = {}",
                a(x0)
            )));
        }
        Ok(Self {
            a,
            b,
            tol,
            // The anchor is carried as the seed checkpoint (`Psi(x0) = 1`).
            checkpoints: RefCell::new(vec![(x0, 0.0)]),
        })
    }

    /// `log f(x)` up to the normalization constant:
    /// `-log a(x) - int_{x0}^x b/a`.
    pub fn ln_eval(&self, x: f64) -> Result<f64> {
        let ax = (self.a)(x);
        if !(ax > 0.0) {
            return Err(Error::InvalidParam(format!(
                "diffusion coefficient must be positive, a({x}) = {ax}"
            )));
        }
        Ok(-ax.ln() - self.exponent(x)?)
    }

    /// Unnormalized stationary density at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.ln_eval(x).map(f64::exp)
    }

    /// Normalization constant `int_lo^hi eval` by adaptive quadrature, so that
    /// `eval / constant` is a probability density on `[lo, hi]`.
    pub fn normalization(&self, lo: f64, hi: f64, splits: &[f64]) -> Result<f64> {
        let f = |x: f64| match self.ln_eval(x) {
            Ok(v) => v.exp(),
            Err(_) => f64::NAN,
        };
        let q = quadrature::integrate_split(f, lo, Some(hi), splits, self.tol)?;
        if !(q.value > 0.0) {
            return Err(Error::NotADensity(format!(
                "steady profile has non-positive mass {} on [{lo}, {hi}]",
                q.value
            )));
        }
        Ok(q.value)
    }

    /// `int_{x0}^{x} b/a`, reusing the nearest memoized checkpoint.
    fn exponent(&self, x: f64) -> Result<f64> {
        let (anchor, base) = {
            let cps = self.checkpoints.borrow();
            *cps.iter()
                .min_by(|p, q| {
                    (p.0 - x)
                        .abs()
                        .partial_cmp(&(q.0 - x).abs())
                        .expect("finite checkpoints")
                })
                .expect("at least the anchor checkpoint")
        };
        if anchor == x {
            return Ok(base);
        }
        let ratio = |s: f64| (self.b)(s) / (self.a)(s);
        let (lo, hi, sign) = if anchor < x {
            (anchor, x, 1.0)
        } else {
            (x, anchor, -1.0)
        };
        let q = quadrature::integrate(ratio, lo, hi, self.tol).map_err(|e| match e {
            Error::QuadratureNonConvergence {
                estimate, error, ..
            } => Error::QuadratureNonConvergence {
                context: format!("b/a not integrable on [{lo:e}, {hi:e}]"),
                estimate,
                error,
            },
            other => other,
        })?;
        let value = base + sign * q.value;
        let mut cps = self.checkpoints.borrow_mut();
        if cps.len() < 4096 {
            cps.push((x, value));
        }
        Ok(value)
    }
}
