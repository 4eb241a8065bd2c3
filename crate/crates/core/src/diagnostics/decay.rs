//! Time series of convergence observables and exponential-rate fitting.

use crate::error::{Error, Result};
use serde::Serialize;

/// Floor below which an entropy value is considered numerically exhausted and
/// excluded from rate fits.
pub const FIT_ENTROPY_FLOOR: f64 = 1e-12;

/// Fraction of the observed time span dropped from the front of a fit, so an
/// initial transient does not bias the asymptotic rate.
pub const FIT_TRANSIENT_FRACTION: f64 = 0.05;

/// Minimum number of usable points for a rate fit.
pub const FIT_MIN_POINTS: usize = 5;

/// One snapshot of a relaxation run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub mass: f64,
    pub mean: f64,
    pub m2: f64,
    #[serde(rename = "H")]
    pub entropy: f64,
    #[serde(rename = "I_delta")]
    pub fisher: f64,
    #[serde(rename = "l1_to_eq")]
    pub l1: f64,
}

/// Snapshot series of a relaxation run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DecaySeries {
    pub rows: Vec<DecayRow>,
}

impl DecaySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: DecayRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.entropy).collect()
    }

    pub fn l1s(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l1).collect()
    }

    /// Fits `H(t) ~ C exp(-rate t)` over the recorded snapshots.
    pub fn fit_entropy_rate(&self) -> Result<RateFit> {
        fit_decay_rate(&self.times(), &self.entropies())
    }

    /// Exponential-rate fit of the selected column.
    pub fn fit_rate(&self, column: DecayColumn) -> Result<RateFit> {
        let values = match column {
            DecayColumn::Entropy => self.entropies(),
            DecayColumn::L1 => self.l1s(),
        };
        fit_decay_rate(&self.times(), &values)
    }

    /// Largest ratio `H(t) / (H(t0) exp(-rate (t - t0)))` over the series,
    /// anchored at the first snapshot with usable entropy. A value at most 1
    /// means the series sits below the exponential envelope.
    pub fn entropy_envelope_ratio(&self, rate: f64) -> Option<f64> {
        let mut anchor: Option<(f64, f64)> = None;
        let mut worst: Option<f64> = None;
        for r in &self.rows {
            if r.entropy <= FIT_ENTROPY_FLOOR {
                continue;
            }
            match anchor {
                None => anchor = Some((r.t, r.entropy)),
                Some((t0, h0)) => {
                    let envelope = h0 * (-rate * (r.t - t0)).exp();
                    let ratio = r.entropy / envelope;
                    worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
                }
            }
        }
        worst
    }
}

/// Column of a [`DecaySeries`] that admits an exponential-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayColumn {
    Entropy,
    L1,
}

/// Result of an exponential-decay fit: `values ~ exp(log_intercept - rate t)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub log_intercept: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least-squares fit of `ln(values)` against `t`, dropping the first
/// [`FIT_TRANSIENT_FRACTION`] of the time span and values at or below
/// [`FIT_ENTROPY_FLOOR`].
pub fn fit_decay_rate(ts: &[f64], values: &[f64]) -> Result<RateFit> {
    if ts.len() != values.len() {
        return Err(Error::InvalidParam(format!(
            "rate fit needs matching series, got {} times and {} values",
            ts.len(),
            values.len()
        )));
    }
    let (t_min, t_max) = ts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    let cutoff = t_min + FIT_TRANSIENT_FRACTION * (t_max - t_min);
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= cutoff && v > FIT_ENTROPY_FLOOR)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < FIT_MIN_POINTS {
        return Err(Error::InvalidParam(format!(
            "rate fit needs at least {FIT_MIN_POINTS} usable points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let st: f64 = pts.iter().map(|(t, _)| t).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let stt: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sty: f64 = pts.iter().map(|(t, y)| t * y).sum();
    let denom = n * stt - st * st;
    if denom <= 0.0 {
        return Err(Error::InvalidParam(
            "rate fit needs at least two distinct times".to_string(),
        ));
    }
    let slope = (n * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / n;
    let y_mean = sy / n;
    let ss_tot: f64 = pts.iter().map(|(_, y)| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|(t, y)| (y - (intercept + slope * t)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        rate: -slope,
        log_intercept: intercept,
        r_squared,
        points_used: pts.len(),
    })
}
