//! Coordinate change between the wealth variable and the unit-diffusion frame.
//!
//! For kernel exponent `delta > 0` the map is `y = (2/delta) x^(-delta/2)`;
//! it flips orientation (large wealth maps to small `y`) and turns the
//! wealth-dependent diffusion `x^(2+delta)` into a constant. For `delta = 0`
//! the same construction degenerates to the log map `y = log x` onto the whole
//! real line.
//!
//! Pushforwards use `f(x) = g(y(x)) |dy/dx|` with `|dy/dx| = x^(-1-delta/2)`
//! (`1/x` at `delta = 0`).

use crate::error::{Error, Result};

fn check_delta(delta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "delta must lie in [0, 1], got {delta}"
        )))
    }
}

/// `y(x)`: the unit-diffusion coordinate of wealth `x > 0`.
pub fn to_transformed(x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(x > 0.0) {
        return Err(Error::InvalidParam(format!(
            "transform needs x > 0, got {x}"
        )));
    }
    if delta == 0.0 {
        Ok(x.ln())
    } else {
        Ok((2.0 / delta) * x.powf(-delta / 2.0))
    }
}

/// Inverse map `x(y)`. For `delta > 0` the domain is `y > 0`; for `delta = 0`
/// any finite `y`.
pub fn from_transformed(y: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if delta == 0.0 {
        if !y.is_finite() {
            return Err(Error::InvalidParam(format!("y must be finite, got {y}")));
        }
        Ok(y.exp())
    } else {
        if !(y > 0.0) {
            return Err(Error::InvalidParam(format!(
                "inverse transform needs y > 0 for delta > 0, got {y}"
            )));
        }
        Ok((delta * y / 2.0).powf(-2.0 / delta))
    }
}

/// Magnitude of the Jacobian `|dy/dx|` at wealth `x`.
pub fn jacobian_dy_dx(x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(x > 0.0) {
        return Err(Error::InvalidParam(format!(
            "jacobian needs x > 0, got {x}"
        )));
    }
    if delta == 0.0 {
        Ok(1.0 / x)
    } else {
        Ok(x.powf(-1.0 - delta / 2.0))
    }
}
