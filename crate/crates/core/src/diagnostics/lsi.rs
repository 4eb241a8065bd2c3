//! Quadrature audit of the logarithmic Sobolev inequality.
//!
//! The unit-diffusion coordinate turns the equilibrium into a generalized
//! Gamma profile `g(y) = exp(-W(y))/C` with uniformly convex potential,
//! `W'' >= rho`, so every perturbed density `f = psi g / Z` must satisfy
//! `I(f|g) >= 2 rho H(f|g)`. The audit builds a family of multiplicative
//! bump perturbations
//!
//! ```text
//! psi(y) = 1 + sum_k a_k exp(-(y - c_k)^2 / (2 s_k^2)),   a_k in [-1/4, 2],
//! ```
//!
//! (so `psi >= 1/4 > 0`) with seeded-random amplitudes, centers, and widths,
//! and evaluates `H` and `I` by adaptive quadrature twice: once in the
//! transformed coordinate and once pulled back to the wealth coordinate,
//! where the Fisher weight `w^{2+delta}` makes the two integrals identical
//! term by term. Agreement of the two routes checks the transform/weight
//! bookkeeping; the ratio `2 rho H / I <= 1` checks the inequality itself.

use crate::analytic::{ggamma_params, rho_delta, AnalyticDensity};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quadrature;
use rand::Rng;
use serde::Serialize;

/// Absolute tolerance of each audit integral.
const AUDIT_QUAD_TOL: f64 = 1e-11;

/// Lowest admissible bump amplitude (keeps `psi >= 1/4`).
pub const MIN_AMPLITUDE: f64 = -0.25;
/// Highest admissible bump amplitude.
pub const MAX_AMPLITUDE: f64 = 2.0;

/// A three-bump multiplicative perturbation of the transformed equilibrium.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerturbationSpec {
    pub amplitudes: [f64; 3],
    pub centers: [f64; 3],
    pub widths: [f64; 3],
}

impl PerturbationSpec {
    pub fn new(amplitudes: [f64; 3], centers: [f64; 3], widths: [f64; 3]) -> Result<Self> {
        for &a in &amplitudes {
            if !(MIN_AMPLITUDE..=MAX_AMPLITUDE).contains(&a) {
                return Err(Error::InvalidParam(format!(
                    "bump amplitude {a} outside [{MIN_AMPLITUDE}, {MAX_AMPLITUDE}]"
                )));
            }
        }
        for &s in &widths {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "bump width must be positive, got {s}"
                )));
            }
        }
        for &c in &centers {
            if !c.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "bump center must be finite, got {c}"
                )));
            }
        }
        Ok(Self {
            amplitudes,
            centers,
            widths,
        })
    }

    /// `psi(y) >= 1/4` by the amplitude constraint.
    pub fn psi(&self, y: f64) -> f64 {
        let mut v = 1.0;
        for k in 0..3 {
            let z = (y - self.centers[k]) / self.widths[k];
            v += self.amplitudes[k] * (-0.5 * z * z).exp();
        }
        v
    }

    /// `d psi / d y`.
    pub fn dpsi(&self, y: f64) -> f64 {
        let mut v = 0.0;
        for k in 0..3 {
            let z = (y - self.centers[k]) / self.widths[k];
            v += self.amplitudes[k] * (-0.5 * z * z).exp() * (-z / self.widths[k]);
        }
        v
    }
}

/// Audit outcome for a single perturbation; `entropy` and `fisher` are the
/// transformed-coordinate values, the mismatches compare against the
/// wealth-coordinate evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerturbationResult {
    pub spec: PerturbationSpec,
    pub entropy: f64,
    pub fisher: f64,
    pub ratio: f64,
    pub entropy_mismatch: f64,
    pub fisher_mismatch: f64,
}

/// Full audit over the perturbation family.
#[derive(Debug, Clone, Serialize)]
pub struct LsiAudit {
    pub rho: f64,
    pub worst_ratio: f64,
    pub worst: PerturbationSpec,
    pub max_entropy_mismatch: f64,
    pub max_fisher_mismatch: f64,
    pub results: Vec<PerturbationResult>,
}

/// Everything fixed across the perturbations of one audit.
struct AuditFrame {
    g_y: AnalyticDensity,
    f_x: AnalyticDensity,
    delta: f64,
    rho: f64,
    y_mean: f64,
    y_sd: f64,
    y_splits: [f64; 3],
    x_splits: [f64; 3],
}

impl AuditFrame {
    fn new(params: &ModelParams) -> Result<Self> {
        if params.is_delta0_reference() {
            return Err(Error::InvalidParam(
                "log-Sobolev audit needs delta > 0; the Maxwellian reference has no uniform convexity constant".to_string(),
            ));
        }
        params.require_mu_above_one()?;
        let (delta, mu, m) = (params.delta(), params.mu(), params.m());
        let rho = rho_delta(delta, mu, m)?;
        let gg = ggamma_params(delta, mu, m)?;
        let g_y = AnalyticDensity::generalized_gamma(gg.kappa_shape, gg.theta, gg.nu)?;
        let f_x = AnalyticDensity::inverse_gamma_delta(mu, m, delta)?;
        let y_mean = g_y.mean().value();
        let y_sd = g_y.variance().value().sqrt();
        let y_splits = [
            (y_mean - 2.0 * y_sd).max(0.1 * y_mean),
            y_mean,
            y_mean + 2.0 * y_sd,
        ];
        let x_mean = f_x.mean().value();
        let x_splits = [0.2 * x_mean, x_mean, 5.0 * x_mean];
        Ok(Self {
            g_y,
            f_x,
            delta,
            rho,
            y_mean,
            y_sd,
            y_splits,
            x_splits,
        })
    }
}

/// Runs the audit over `trials` seeded-random perturbations of the
/// transformed equilibrium. Errors for the Maxwellian reference
/// (`delta = 0`), which has no uniform convexity constant.
///
/// Randomization ranges: amplitudes uniform in `[-1/4, 2]`, centers within
/// two standard deviations of the transformed equilibrium mean, widths
/// between 0.3 and 1.5 standard deviations. Identical `(trials, seed)` give
/// an identical audit.
pub fn lsi_audit(params: &ModelParams, trials: usize, seed: u64) -> Result<LsiAudit> {
    if trials == 0 {
        return Err(Error::InvalidParam(
            "log-Sobolev audit needs at least one trial".to_string(),
        ));
    }
    let frame = AuditFrame::new(params)?;
    let mut rng = crate::rng::substream_rng(seed, 0);
    let mut results = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut amplitudes = [0.0; 3];
        let mut centers = [0.0; 3];
        let mut widths = [0.0; 3];
        for k in 0..3 {
            amplitudes[k] = rng.gen_range(MIN_AMPLITUDE..=MAX_AMPLITUDE);
            centers[k] = frame.y_mean + rng.gen_range(-2.0..2.0) * frame.y_sd;
            widths[k] = rng.gen_range(0.3..1.5) * frame.y_sd;
        }
        let spec = PerturbationSpec::new(amplitudes, centers, widths)?;
        results.push(audit_one(&spec, &frame)?);
    }

    let worst = results
        .iter()
        .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).expect("finite ratios"))
        .expect("nonempty audit family");
    Ok(LsiAudit {
        rho: frame.rho,
        worst_ratio: worst.ratio,
        worst: worst.spec,
        max_entropy_mismatch: results
            .iter()
            .map(|r| r.entropy_mismatch)
            .fold(0.0, f64::max),
        max_fisher_mismatch: results
            .iter()
            .map(|r| r.fisher_mismatch)
            .fold(0.0, f64::max),
        results,
    })
}

/// Audits one explicit perturbation (both coordinate routes).
pub fn audit_perturbation(
    params: &ModelParams,
    spec: &PerturbationSpec,
) -> Result<PerturbationResult> {
    audit_one(spec, &AuditFrame::new(params)?)
}

fn audit_one(spec: &PerturbationSpec, frame: &AuditFrame) -> Result<PerturbationResult> {
    let quad = |f: &dyn Fn(f64) -> f64, splits: &[f64]| -> Result<f64> {
        Ok(quadrature::integrate_split(f, 0.0, None, splits, AUDIT_QUAD_TOL)?.value)
    };
    let delta = frame.delta;

    // Transformed coordinate: the canonical evaluation.
    let gy = |y: f64| frame.g_y.ln_pdf_unchecked(y).exp();
    let z_y = quad(&|y| gy(y) * spec.psi(y), &frame.y_splits)?;
    let t_y = quad(&|y| gy(y) * spec.psi(y) * spec.psi(y).ln(), &frame.y_splits)?;
    let i_y = quad(&|y| gy(y) * spec.dpsi(y).powi(2) / spec.psi(y), &frame.y_splits)? / z_y;
    let h_y = t_y / z_y - z_y.ln();

    // Wealth coordinate: psi composed with y(w) = (2/delta) w^{-delta/2}; the
    // Fisher weight w^{2+delta} cancels the squared Jacobian exactly.
    let y_of = |w: f64| (2.0 / delta) * w.powf(-0.5 * delta);
    let fx = |w: f64| frame.f_x.ln_pdf_unchecked(w).exp();
    let z_x = quad(&|w| fx(w) * spec.psi(y_of(w)), &frame.x_splits)?;
    let t_x = quad(
        &|w| {
            let p = spec.psi(y_of(w));
            fx(w) * p * p.ln()
        },
        &frame.x_splits,
    )?;
    let i_x = quad(
        &|w| {
            let y = y_of(w);
            fx(w) * spec.dpsi(y).powi(2) / spec.psi(y)
        },
        &frame.x_splits,
    )? / z_x;
    let h_x = t_x / z_x - z_x.ln();

    let floor = 1e-14;
    // The unperturbed density gives H = I = 0; report the 0/0 ratio as a
    // satisfied inequality.
    let ratio = if i_y.abs() <= floor && h_y.abs() <= floor {
        0.0
    } else {
        2.0 * frame.rho * h_y / i_y
    };
    Ok(PerturbationResult {
        spec: *spec,
        entropy: h_y,
        fisher: i_y,
        ratio,
        entropy_mismatch: (h_x - h_y).abs() / h_y.abs().max(floor),
        fisher_mismatch: (i_x - i_y).abs() / i_y.abs().max(floor),
    })
}
