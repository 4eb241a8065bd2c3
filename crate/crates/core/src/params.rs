//! Model parameters shared by the kinetic and Fokker-Planck layers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the wealth-exchange model with interaction kernel
/// `kappa_kernel * (v w)^delta`.
///
/// `lambda` is the deterministic trade fraction, `sigma` the variance of the
/// random return `eta`, `m` the reference mean wealth entering the limiting
/// equation, and `delta` the kernel exponent. The drift-diffusion ratio
/// `mu = 2 lambda / sigma` is always recomputed from `lambda` and `sigma`,
/// never stored, so the two representations cannot drift apart.
///
/// `delta = 0` (the Maxwellian, wealth-independent kernel) is accepted only
/// through [`ModelParams::reference_delta0`]; the positive-delta constructors
/// reject it so that delta-dependent formulas cannot be fed the degenerate
/// case by accident.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    sigma: f64,
    m: f64,
    delta: f64,
    kappa_kernel: f64,
}

impl ModelParams {
    /// Model with kernel exponent `0 < delta <= 1`.
    pub fn new(lambda: f64, sigma: f64, m: f64, delta: f64, kappa_kernel: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "delta must lie in (0, 1] (got {delta}); use reference_delta0 for the Maxwellian case"
            )));
        }
        Self::build(lambda, sigma, m, delta, kappa_kernel)
    }

    /// Maxwellian reference model (`delta = 0`, wealth-independent kernel).
    pub fn reference_delta0(lambda: f64, sigma: f64, m: f64, kappa_kernel: f64) -> Result<Self> {
        Self::build(lambda, sigma, m, 0.0, kappa_kernel)
    }

    fn build(lambda: f64, sigma: f64, m: f64, delta: f64, kappa_kernel: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParam(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParam(format!("m must be positive, got {m}")));
        }
        if !(kappa_kernel > 0.0 && kappa_kernel.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "kappa_kernel must be positive, got {kappa_kernel}"
            )));
        }
        Ok(Self {
            lambda,
            sigma,
            m,
            delta,
            kappa_kernel,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn kappa_kernel(&self) -> f64 {
        self.kappa_kernel
    }

    /// Drift-diffusion ratio `mu = 2 lambda / sigma`, recomputed on demand.
    pub fn mu(&self) -> f64 {
        2.0 * self.lambda / self.sigma
    }

    /// True for the Maxwellian reference model built by `reference_delta0`.
    pub fn is_delta0_reference(&self) -> bool {
        self.delta == 0.0
    }

    /// Checks the second-moment contraction condition `sigma + lambda^2 < 2 lambda`.
    ///
    /// Under this condition the kinetic second moment stays bounded; the
    /// steppers require it before running.
    pub fn require_second_moment_condition(&self) -> Result<()> {
        if self.sigma + self.lambda * self.lambda < 2.0 * self.lambda {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "second-moment condition sigma + lambda^2 < 2 lambda violated: {} + {} >= {}",
                self.sigma,
                self.lambda * self.lambda,
                2.0 * self.lambda
            )))
        }
    }

    /// Checks `mu > 1`, required for the delta-dependent equilibrium to have
    /// finite mean.
    pub fn require_mu_above_one(&self) -> Result<()> {
        let mu = self.mu();
        if mu > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!(
                "mu = 2 lambda / sigma = {mu} must exceed 1 for an integrable equilibrium"
            )))
        }
    }

    /// Grazing-scaled copy: `lambda -> eps * lambda`, `sigma -> eps * sigma`
    /// (the random return is scaled by sqrt(eps)). The kernel is unchanged.
    pub fn grazing_scaled(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "grazing parameter eps must lie in (0, 1], got {eps}"
            )));
        }
        // Scaled second-moment condition: eps sigma + eps^2 lambda^2 < 2 eps lambda.
        let lhs = eps * self.sigma + eps * eps * self.lambda * self.lambda;
        let rhs = 2.0 * eps * self.lambda;
        if lhs >= rhs {
            return Err(Error::InvalidParam(format!(
                "scaled second-moment condition fails at eps = {eps}: {lhs} >= {rhs}"
            )));
        }
        Ok(Self {
            lambda: eps * self.lambda,
            sigma: eps * self.sigma,
            ..*self
        })
    }
}
