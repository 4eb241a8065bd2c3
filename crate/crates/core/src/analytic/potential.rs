//! Drift potential in the unit-diffusion coordinate and its convexity
//! constant.
//!
//! After the coordinate change `y = (2/delta) x^(-delta/2)` the linear
//! Fokker-Planck equation becomes `dg/dt = g'' + (W' g)'` with potential
//!
//! ```text
//! W'(y) = mu m (delta/2)^(2/delta - 1) y^(2/delta - 1)
//!         - (2/delta) (1 + mu + delta/2) / y          (delta > 0)
//! W'(y) = (1 + mu) - mu m e^(-y)                      (delta = 0)
//! ```
//!
//! For `delta > 0` the second derivative `W''` attains a positive minimum
//! `rho(delta)`; this uniform convexity drives the exponential entropy decay
//! at rate `2 rho(delta)`. The Maxwellian case only has `W'' = mu m e^(-y) > 0`
//! with infimum zero over the real line — convex but not uniformly so, which
//! is exactly the qualitative gap the `delta > 0` kernels close.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use serde::{Deserialize, Serialize};

/// Parameters `(kappa_shape, theta, nu)` of the generalized Gamma profile in
/// the transformed coordinate. `kappa_shape` is the shape exponent of the
/// density prefactor `y^(kappa_shape - 1)`; it is unrelated to the kernel
/// intensity `kappa_kernel` of [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GGammaParams {
    pub kappa_shape: f64,
    pub theta: f64,
    pub nu: f64,
}

/// Drift potential `W` in the transformed coordinate, with first and second
/// derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Potential {
    mu: f64,
    m: f64,
    delta: f64,
    /// Reference point where `W` is anchored to zero.
    y0: f64,
}

impl Potential {
    /// Potential for kernel exponent `delta`, anchored at `W(1) = 0`.
    ///
    /// `delta = 0` is accepted and selects the Maxwellian branch; build it
    /// from [`ModelParams::reference_delta0`] to make the intent explicit.
    pub fn new(p: &ModelParams) -> Self {
        Self {
            mu: p.mu(),
            m: p.m(),
            delta: p.delta(),
            y0: 1.0,
        }
    }

    /// Potential from raw `(mu, m, delta)`, anchored at `W(1) = 0`.
    pub fn from_raw(mu: f64, m: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0 && m > 0.0 && (0.0..=1.0).contains(&delta)) {
            return Err(Error::InvalidParam(format!(
                "potential needs mu > 0, m > 0, 0 <= delta <= 1, got ({mu}, {m}, {delta})"
            )));
        }
        Ok(Self {
            mu,
            m,
            delta,
            y0: 1.0,
        })
    }

    pub fn is_delta0(&self) -> bool {
        self.delta == 0.0
    }

    fn in_domain(&self, y: f64) -> bool {
        if self.is_delta0() {
            y.is_finite()
        } else {
            y > 0.0
        }
    }

    /// `W(y) - W(y0)`, from the closed-form antiderivative of `W'`.
    pub fn w(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        let (mu, m, d) = (self.mu, self.m, self.delta);
        if self.is_delta0() {
            let v = (1.0 + mu) * (y - self.y0) + mu * m * ((-y).exp() - (-self.y0).exp());
            Ok(v)
        } else {
            let p = 2.0 / d;
            // int y^{p-1} = y^p / p, so the leading term integrates to
            // mu m (d/2)^{p-1} (y^p - y0^p)/p = mu m (d/2)^p (y^p - y0^p).
            let v = mu * m * (d / 2.0).powf(p) * (y.powf(p) - self.y0.powf(p))
                - p * (1.0 + mu + d / 2.0) * (y / self.y0).ln();
            Ok(v)
        }
    }

    /// First derivative `W'(y)`.
    pub fn wp(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        let (mu, m, d) = (self.mu, self.m, self.delta);
        if self.is_delta0() {
            Ok((1.0 + mu) - mu * m * (-y).exp())
        } else {
            let p = 2.0 / d;
            Ok(mu * m * (d / 2.0).powf(p - 1.0) * y.powf(p - 1.0) - p * (1.0 + mu + d / 2.0) / y)
        }
    }

    /// Second derivative `W''(y)`.
    pub fn wpp(&self, y: f64) -> Result<f64> {
        self.check(y)?;
        let (mu, m, d) = (self.mu, self.m, self.delta);
        if self.is_delta0() {
            Ok(mu * m * (-y).exp())
        } else {
            let p = 2.0 / d;
            Ok(mu * m * (d / 2.0).powf(p - 1.0) * (p - 1.0) * y.powf(p - 2.0)
                + p * (1.0 + mu + d / 2.0) / (y * y))
        }
    }

    fn check(&self, y: f64) -> Result<()> {
        if self.in_domain(y) {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "point {y} outside the potential's domain (delta = {})",
                self.delta
            )))
        }
    }
}

/// Uniform convexity constant `rho(delta) = min_y W''(y)` of the transformed
/// potential, for `0 < delta <= 1`:
///
/// ```text
/// rho(delta) = (delta/2) (m mu)^delta (1 + delta/2 + mu)^(1-delta)
///              * (2-delta)^delta / (1-delta)^(1-delta) * delta^(-2 delta)
/// rho(1)     = m mu / 2
/// ```
///
/// The bound is attained: `W''` has exactly this minimum, so the entropy decay
/// rate `2 rho(delta)` it certifies is the best uniform-convexity rate.
/// Errors for `delta = 0`, where the infimum is zero and no uniform rate
/// exists.
pub fn rho_delta(delta: f64, mu: f64, m: f64) -> Result<f64> {
    if !(mu > 0.0 && m > 0.0) {
        return Err(Error::InvalidParam(format!(
            "rho_delta needs mu > 0 and m > 0, got ({mu}, {m})"
        )));
    }
    if delta == 0.0 {
        return Err(Error::InvalidParam(
            "rho_delta undefined at delta = 0: W'' has infimum zero, no uniform convexity"
                .to_string(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    if delta == 1.0 {
        return Ok(m * mu / 2.0);
    }
    let value = (delta / 2.0)
        * (m * mu).powf(delta)
        * (1.0 + delta / 2.0 + mu).powf(1.0 - delta)
        * (2.0 - delta).powf(delta)
        / (1.0 - delta).powf(1.0 - delta)
        * delta.powf(-2.0 * delta);
    Ok(value)
}

/// Parameters of the generalized Gamma equilibrium in the transformed
/// coordinate:
///
/// ```text
/// nu          = 2/delta
/// kappa_shape = (2/delta) (1 + delta + mu)
/// theta       = 2 / (delta (mu m)^(delta/2))
/// ```
///
/// Errors for `delta = 0` (the transform degenerates to the log map there;
/// the equilibrium is [`super::AnalyticDensity::LogTransformedDelta0`]).
pub fn ggamma_params(delta: f64, mu: f64, m: f64) -> Result<GGammaParams> {
    if delta == 0.0 {
        return Err(Error::InvalidParam(
            "ggamma_params undefined at delta = 0; use the log-transformed equilibrium".to_string(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0 && mu > 0.0 && m > 0.0) {
        return Err(Error::InvalidParam(format!(
            "ggamma_params needs 0 < delta <= 1, mu > 0, m > 0, got ({delta}, {mu}, {m})"
        )));
    }
    Ok(GGammaParams {
        kappa_shape: (2.0 / delta) * (1.0 + delta + mu),
        theta: 2.0 / (delta * (mu * m).powf(delta / 2.0)),
        nu: 2.0 / delta,
    })
}

/// Convexity constant expressed in generalized-Gamma parameters:
///
/// ```text
/// rho = (kappa_shape - 1)^(1 - 2/nu) / theta^2 * nu/(nu - 2)
///       * (nu (nu-1) (nu-2) / 2)^(2/nu)              (nu > 2)
/// rho = 2 / theta^2                                  (nu = 2)
/// ```
///
/// The `nu = 2` case is the removable singularity of the general formula (the
/// `nu/(nu-2)` pole cancels against the vanishing power); the limit is taken
/// in closed form rather than evaluated nearby.
pub fn rho_ggamma(g: &GGammaParams) -> Result<f64> {
    let GGammaParams {
        kappa_shape,
        theta,
        nu,
    } = *g;
    if !(kappa_shape > 1.0 && theta > 0.0 && nu >= 2.0) {
        return Err(Error::InvalidParam(format!(
            "rho_ggamma needs kappa_shape > 1, theta > 0, nu >= 2, got ({kappa_shape}, {theta}, {nu})"
        )));
    }
    if nu == 2.0 {
        return Ok(2.0 / (theta * theta));
    }
    let two_over_nu = 2.0 / nu;
    let value = (kappa_shape - 1.0).powf(1.0 - two_over_nu) / (theta * theta) * nu / (nu - 2.0)
        * (nu * (nu - 1.0) * (nu - 2.0) / 2.0).powf(two_over_nu);
    Ok(value)
}
