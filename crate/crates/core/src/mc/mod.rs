//! Direct-simulation Monte Carlo for the kinetic wealth-exchange models.
//!
//! Particles carry nonnegative wealths; a sweep proposes one candidate trade
//! per particle (linear rule, against a sampled market partner) or one trade
//! per disjoint random pair (bilinear rules), thinned against the interaction
//! kernel `K(v, w) = kappa (v w)^delta`. Acceptance uses a single uniform per
//! candidate: accepting with probability `dt K` is the collapsed equivalent
//! of proposing at the sweep bound `dt B` and then accepting with probability
//! `K / B`, and stays an unbiased thinning as long as `dt K <= 1` — which is
//! checked every sweep and reported as an error, never clipped.

mod rules;
mod run;

pub use rules::InteractionRule;
pub use run::{
    replica_scatter, run, run_grazing, run_replicas, McObserver, McOptions, McSeries, MomentRow,
    SweepSchedule,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity};
use crate::rng::substream_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::f64::consts::PI;
use std::sync::Arc;

/// Interaction kernel `K(v, w) = kappa (v w)^delta`: constant in the
/// Maxwellian reference `delta = 0`, and zero whenever a zero-wealth agent is
/// involved for `delta > 0`, which excludes such trades.
pub fn kernel_value(v: f64, w: f64, delta: f64, kappa_kernel: f64) -> f64 {
    if delta == 0.0 {
        kappa_kernel
    } else if delta == 1.0 {
        kappa_kernel * v * w
    } else if delta == 0.5 {
        kappa_kernel * (v * w).sqrt()
    } else {
        kappa_kernel * (v * w).powf(delta)
    }
}

/// Law of the multiplicative market shock `eta`: centered, with known
/// variance and bounded support, so `1 - lambda + eta` stays nonnegative
/// whenever the support bound does not exceed `1 - lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaSpec {
    /// `eta = ±r`, each sign with probability 1/2.
    TwoPoint { r: f64 },
    /// Centered Gaussian conditioned on `[-cutoff, cutoff]`, with the parent
    /// scale chosen so the conditioned variance equals `variance`. Feasible
    /// iff `variance < cutoff^2 / 3`: the conditioned variance grows with the
    /// parent scale and tends to the uniform value `cutoff^2 / 3`.
    TruncatedGaussian { variance: f64, cutoff: f64 },
}

impl EtaSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EtaSpec::TwoPoint { r } => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "two-point shock needs r > 0, got {r}"
                    )));
                }
            }
            EtaSpec::TruncatedGaussian { variance, cutoff } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "shock variance must be positive, got {variance}"
                    )));
                }
                if !(cutoff > 0.0 && cutoff.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "shock cutoff must be positive, got {cutoff}"
                    )));
                }
                let sup = cutoff * cutoff / 3.0;
                if variance >= sup {
                    return Err(Error::InvalidParam(format!(
                        "truncated Gaussian shock infeasible: variance {variance} must lie below cutoff^2/3 = {sup}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact variance of the shock.
    pub fn variance(&self) -> f64 {
        match *self {
            EtaSpec::TwoPoint { r } => r * r,
            EtaSpec::TruncatedGaussian { variance, .. } => variance,
        }
    }

    /// Largest attainable `|eta|`.
    pub fn max_abs(&self) -> f64 {
        match *self {
            EtaSpec::TwoPoint { r } => r,
            EtaSpec::TruncatedGaussian { cutoff, .. } => cutoff,
        }
    }

    /// The grazing rescaling `eta -> sqrt(eps) eta`, exact in distribution
    /// for both families.
    pub fn scaled(&self, eps: f64) -> EtaSpec {
        match *self {
            EtaSpec::TwoPoint { r } => EtaSpec::TwoPoint { r: eps.sqrt() * r },
            EtaSpec::TruncatedGaussian { variance, cutoff } => EtaSpec::TruncatedGaussian {
                variance: eps * variance,
                cutoff: eps.sqrt() * cutoff,
            },
        }
    }

    pub fn sampler(&self) -> Result<EtaSampler> {
        EtaSampler::new(*self)
    }
}

/// Ready-to-draw shock sampler; for the truncated Gaussian the parent
/// standard deviation is solved once by bisection on the strictly increasing
/// map `s -> Var[X | |X| <= cutoff]`, `X ~ N(0, s^2)`.
#[derive(Debug, Clone)]
pub struct EtaSampler {
    spec: EtaSpec,
    parent_sd: f64,
}

impl EtaSampler {
    fn new(spec: EtaSpec) -> Result<Self> {
        spec.validate()?;
        let parent_sd = match spec {
            EtaSpec::TwoPoint { .. } => 0.0,
            EtaSpec::TruncatedGaussian { variance, cutoff } => solve_parent_sd(variance, cutoff)?,
        };
        Ok(Self { spec, parent_sd })
    }

    pub fn spec(&self) -> &EtaSpec {
        &self.spec
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.spec {
            EtaSpec::TwoPoint { r } => {
                if rng.gen::<bool>() {
                    r
                } else {
                    -r
                }
            }
            EtaSpec::TruncatedGaussian { cutoff, .. } => {
                // Rejection against the parent Gaussian; the acceptance
                // probability erf(cutoff / (parent_sd sqrt 2)) is bounded away
                // from zero for every feasible spec.
                for _ in 0..100_000 {
                    let z: f64 =
                        rng.sample::<f64, _>(rand_distr::StandardNormal) * self.parent_sd;
                    if z.abs() <= cutoff {
                        return z;
                    }
                }
                unreachable!("truncated Gaussian rejection starved for {:?}", self.spec)
            }
        }
    }
}

/// Variance of `N(0, s^2)` conditioned on `[-c, c]`.
fn truncated_variance(s: f64, c: f64) -> f64 {
    let z = c / s;
    let denom = erf(z / std::f64::consts::SQRT_2);
    if denom == 0.0 {
        // z underflowed: the conditioned law is uniform on [-c, c].
        return c * c / 3.0;
    }
    s * s * (1.0 - z * (2.0 / PI).sqrt() * (-0.5 * z * z).exp() / denom)
}

/// Parent standard deviation whose conditioned variance hits the target.
fn solve_parent_sd(variance: f64, cutoff: f64) -> Result<f64> {
    // The conditioned variance is below s^2, so the root lies above sqrt(V);
    // double to bracket, then bisect.
    let mut lo = variance.sqrt();
    let mut hi = 2.0 * lo;
    let mut guard = 0;
    while truncated_variance(hi, cutoff) <= variance {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::InvalidParam(format!(
                "no parent scale reaches conditioned variance {variance} under cutoff {cutoff}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_variance(mid, cutoff) < variance {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Law of the gambling share `omega` on (0, 1), symmetric about 1/2 so that
/// `omega` and `1 - omega` are identically distributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    Uniform,
    /// `Beta(alpha, alpha)`.
    SymmetricBeta { alpha: f64 },
}

impl OmegaSpec {
    pub fn validate(&self) -> Result<()> {
        if let OmegaSpec::SymmetricBeta { alpha } = *self {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "symmetric Beta share needs alpha > 0, got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn sampler(&self) -> Result<OmegaSampler> {
        self.validate()?;
        Ok(match *self {
            OmegaSpec::Uniform => OmegaSampler::Uniform,
            OmegaSpec::SymmetricBeta { alpha } => OmegaSampler::Beta(
                rand_distr::Beta::new(alpha, alpha)
                    .map_err(|e| Error::InvalidParam(format!("beta share: {e}")))?,
            ),
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) enum OmegaSampler {
    Uniform,
    Beta(rand_distr::Beta<f64>),
}

impl OmegaSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let w = match self {
                OmegaSampler::Uniform => rng.gen::<f64>(),
                OmegaSampler::Beta(b) => b.sample(rng),
            };
            // Open-interval guard; endpoint draws have negligible probability.
            if w > 0.0 && w < 1.0 {
                return w;
            }
        }
    }
}

/// Law of the market partner `v`; every moment `M_alpha`, `alpha >= 0`, is
/// finite for both families and available in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketSpec {
    Gamma { mean: f64, shape: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl MarketSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarketSpec::Gamma { mean, shape } => {
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "market mean must be positive, got {mean}"
                    )));
                }
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "market shape must be positive, got {shape}"
                    )));
                }
            }
            MarketSpec::Uniform { lo, hi } => {
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "uniform market needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Closed-form moment `M_alpha = E[v^alpha]`.
    pub fn moment(&self, alpha: f64) -> Result<f64> {
        self.validate()?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "market moment order must be nonnegative, got {alpha}"
            )));
        }
        Ok(match *self {
            MarketSpec::Gamma { mean, shape } => {
                let scale = mean / shape;
                scale.powf(alpha)
                    * (statrs::function::gamma::ln_gamma(shape + alpha)
                        - statrs::function::gamma::ln_gamma(shape))
                    .exp()
            }
            MarketSpec::Uniform { lo, hi } => {
                (hi.powf(alpha + 1.0) - lo.powf(alpha + 1.0)) / ((alpha + 1.0) * (hi - lo))
            }
        })
    }

    /// Effective market mean `M_{1+delta} / M_delta` entering the limiting
    /// drift.
    pub fn effective_m(&self, delta: f64) -> Result<f64> {
        Ok(self.moment(1.0 + delta)? / self.moment(delta)?)
    }

    pub(crate) fn sampler(&self) -> Result<MarketSampler> {
        self.validate()?;
        Ok(match *self {
            MarketSpec::Gamma { mean, shape } => MarketSampler::Gamma(
                rand_distr::Gamma::new(shape, mean / shape)
                    .map_err(|e| Error::InvalidParam(format!("market sampler: {e}")))?,
            ),
            MarketSpec::Uniform { lo, hi } => MarketSampler::Uniform { lo, hi },
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) enum MarketSampler {
    Gamma(rand_distr::Gamma<f64>),
    Uniform { lo: f64, hi: f64 },
}

impl MarketSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarketSampler::Gamma(g) => g.sample(rng),
            MarketSampler::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
        }
    }
}

/// A population of agent wealths with its simulation clock and RNG stream.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    wealths: Vec<f64>,
    time: f64,
    rng: ChaCha8Rng,
    sweep: u64,
}

impl ParticleEnsemble {
    pub fn from_wealths(wealths: Vec<f64>, seed: u64) -> Result<Self> {
        if wealths.is_empty() {
            return Err(Error::InvalidParam(
                "ensemble needs at least one particle".to_string(),
            ));
        }
        for &w in &wealths {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "wealths must be finite and nonnegative, got {w}"
                )));
            }
        }
        Ok(Self {
            wealths,
            time: 0.0,
            rng: substream_rng(seed, 0),
            sweep: 0,
        })
    }

    /// `n` wealths uniform on `[lo, hi)`.
    pub fn sample_uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam(
                "ensemble needs at least one particle".to_string(),
            ));
        }
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "uniform initial wealths need 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        let mut rng = substream_rng(seed, 0);
        let wealths = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        Ok(Self {
            wealths,
            time: 0.0,
            rng,
            sweep: 0,
        })
    }

    /// `n` equal wealths.
    pub fn constant(n: usize, w: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam(
                "ensemble needs at least one particle".to_string(),
            ));
        }
        Self::from_wealths(vec![w; n], seed)
    }

    pub fn wealths(&self) -> &[f64] {
        &self.wealths
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n(&self) -> usize {
        self.wealths.len()
    }

    /// Sweeps performed since construction.
    pub fn sweeps_done(&self) -> u64 {
        self.sweep
    }

    pub fn total_wealth(&self) -> f64 {
        self.wealths.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total_wealth() / self.n() as f64
    }

    /// Sample moment `m_alpha` with its standard error. The delete-1
    /// jackknife SE of a sample mean collapses exactly to `s / sqrt(n)` with
    /// `s` the sample standard deviation of `w^alpha`, so that closed form is
    /// used directly.
    pub fn moment_with_se(&self, alpha: f64) -> (f64, f64) {
        let n = self.n() as f64;
        let pow = |w: f64| if alpha == 1.0 { w } else { w.powf(alpha) };
        let mean = self.wealths.iter().map(|&w| pow(w)).sum::<f64>() / n;
        if self.n() < 2 {
            return (mean, 0.0);
        }
        let ss = self
            .wealths
            .iter()
            .map(|&w| (pow(w) - mean).powi(2))
            .sum::<f64>();
        (mean, (ss / (n - 1.0) / n).sqrt())
    }

    /// Sample variance with its large-sample standard error
    /// `sqrt((m4c - v^2 (n-3)/(n-1)) / n)`, `m4c` the fourth central moment.
    pub fn variance_with_se(&self) -> (f64, f64) {
        let n = self.n() as f64;
        let mean = self.mean();
        if self.n() < 2 {
            return (0.0, 0.0);
        }
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        for &w in &self.wealths {
            let d2 = (w - mean) * (w - mean);
            s2 += d2;
            s4 += d2 * d2;
        }
        let var = s2 / (n - 1.0);
        let m4c = s4 / n;
        let se2 = (m4c - var * var * (n - 3.0) / (n - 1.0)).max(0.0) / n;
        (var, se2.sqrt())
    }

    /// Raw histogram on `grid`; returns the density (mass = in-grid fraction)
    /// and the number of particles outside the grid.
    pub fn histogram_on(&self, grid: &Arc<Grid>) -> (GridDensity, usize) {
        let (mut d, outside) = grid.histogram(&self.wealths);
        d.time = self.time;
        (d, outside)
    }

    /// Add-one smoothed histogram (unit mass), for entropy evaluation.
    pub fn smoothed_histogram_on(&self, grid: &Arc<Grid>) -> (GridDensity, usize) {
        let (mut d, outside) = grid.smoothed_histogram(&self.wealths);
        d.time = self.time;
        (d, outside)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rng(seed: u64) -> ChaCha8Rng {
        substream_rng(seed, 0)
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_value(2.0, 3.0, 1.0, 1.0), 6.0);
        assert_eq!(kernel_value(0.0, 5.0, 0.7, 3.0), 0.0);
        assert_eq!(kernel_value(0.0, 5.0, 0.0, 3.0), 3.0);
        assert_relative_eq!(
            kernel_value(2.0, 3.0, 0.5, 2.0),
            2.0 * 6.0_f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            kernel_value(1.7, 0.4, 0.3, 1.0),
            (1.7 * 0.4_f64).powf(0.3),
            max_relative = 1e-15
        );
    }

    #[test]
    fn two_point_shock_matches_declared_moments() {
        let spec = EtaSpec::TwoPoint { r: 0.2 };
        let sampler = spec.sampler().unwrap();
        let mut rng = rng(11);
        let n = 100_000;
        let mut sum = 0.0;
        let mut count_pos = 0usize;
        for _ in 0..n {
            let e = sampler.sample(&mut rng);
            assert!(e == 0.2 || e == -0.2);
            sum += e;
            if e > 0.0 {
                count_pos += 1;
            }
        }
        let mean = sum / n as f64;
        let se = 0.2 / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs se {se}");
        assert!((count_pos as f64 / n as f64 - 0.5).abs() < 0.01);
        assert_relative_eq!(spec.variance(), 0.04, max_relative = 1e-15);
        assert_eq!(spec.max_abs(), 0.2);
    }

    #[test]
    fn truncated_gaussian_matches_declared_variance() {
        let spec = EtaSpec::TruncatedGaussian {
            variance: 0.04,
            cutoff: 0.5,
        };
        let sampler = spec.sampler().unwrap();
        // The solved parent scale reproduces the target conditioned variance.
        assert_relative_eq!(
            truncated_variance(sampler.parent_sd, 0.5),
            0.04,
            max_relative = 1e-12
        );
        let mut rng = rng(12);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for _ in 0..n {
            let e = sampler.sample(&mut rng);
            assert!(e.abs() <= 0.5);
            sum += e;
            sum2 += e * e;
            sum4 += e * e * e * e;
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = sum2 / nf - mean * mean;
        let se_mean = (0.04_f64 / nf).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
        let se_var = ((sum4 / nf - var * var) / nf).sqrt();
        assert!(
            (var - 0.04).abs() < 3.0 * se_var,
            "variance {var} vs se {se_var}"
        );
    }

    #[test]
    fn infeasible_truncated_gaussian_rejected() {
        // Conditioned variance can never reach cutoff^2 / 3.
        let spec = EtaSpec::TruncatedGaussian {
            variance: 0.09,
            cutoff: 0.5,
        };
        assert!(spec.validate().is_err());
        assert!(EtaSpec::TwoPoint { r: -0.1 }.validate().is_err());
        assert!(EtaSpec::TwoPoint { r: 0.0 }.validate().is_err());
    }

    #[test]
    fn scaled_shock_is_exact() {
        let spec = EtaSpec::TruncatedGaussian {
            variance: 0.1,
            cutoff: 0.9,
        };
        let s = spec.scaled(0.25);
        assert_eq!(
            s,
            EtaSpec::TruncatedGaussian {
                variance: 0.025,
                cutoff: 0.45
            }
        );
        assert_relative_eq!(s.variance(), 0.25 * spec.variance(), max_relative = 1e-15);
        let tp = EtaSpec::TwoPoint { r: 0.2 }.scaled(0.25);
        assert_eq!(tp, EtaSpec::TwoPoint { r: 0.1 });
    }

    #[test]
    fn market_moments_match_empirical() {
        // Closed-form M_alpha vs 10^6 samples, within three standard errors.
        let spec = MarketSpec::Gamma {
            mean: 2.0,
            shape: 3.0,
        };
        let sampler = spec.sampler().unwrap();
        let mut rng = rng(13);
        let n = 1_000_000;
        let orders = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
        let mut sums = [0.0; 6];
        let mut sums2 = [0.0; 6];
        for _ in 0..n {
            let v = sampler.sample(&mut rng);
            assert!(v >= 0.0);
            for (k, &a) in orders.iter().enumerate() {
                let x = v.powf(a);
                sums[k] += x;
                sums2[k] += x * x;
            }
        }
        for (k, &a) in orders.iter().enumerate() {
            let nf = n as f64;
            let emp = sums[k] / nf;
            let se = ((sums2[k] / nf - emp * emp) / nf).sqrt();
            let exact = spec.moment(a).unwrap();
            assert!(
                (emp - exact).abs() < 3.0 * se,
                "order {a}: empirical {emp} vs exact {exact} (se {se})"
            );
        }
        assert_relative_eq!(spec.moment(1.0).unwrap(), 2.0, max_relative = 1e-13);
        // Gamma(shape 3, scale 2/3): M_2 = scale^2 * 3 * 4 = 16/3.
        assert_relative_eq!(spec.moment(2.0).unwrap(), 16.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn uniform_market_moments_closed_form() {
        let spec = MarketSpec::Uniform { lo: 0.0, hi: 2.0 };
        assert_relative_eq!(spec.moment(0.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(spec.moment(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(spec.moment(2.0).unwrap(), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(
            spec.moment(0.5).unwrap(),
            2.0_f64.sqrt() * 2.0 / 3.0,
            max_relative = 1e-14
        );
        assert!(MarketSpec::Uniform { lo: -1.0, hi: 1.0 }.validate().is_err());
        assert!(MarketSpec::Gamma {
            mean: 0.0,
            shape: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn effective_market_mean() {
        // Gamma(shape 3, scale 1/3.5): M_{1.5}/M_{0.5} = scale * 3.5 = 1.
        let spec = MarketSpec::Gamma {
            mean: 3.0 / 3.5,
            shape: 3.0,
        };
        assert_relative_eq!(spec.effective_m(0.5).unwrap(), 1.0, max_relative = 1e-13);
        // delta = 0 reduces to the plain mean.
        assert_relative_eq!(
            spec.effective_m(0.0).unwrap(),
            3.0 / 3.5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn omega_symmetric_about_half() {
        for spec in [OmegaSpec::Uniform, OmegaSpec::SymmetricBeta { alpha: 3.0 }] {
            let sampler = spec.sampler().unwrap();
            let mut rng = rng(14);
            let n = 100_000;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let w = sampler.sample(&mut rng);
                assert!(w > 0.0 && w < 1.0);
                sum += w;
                sum2 += (w - 0.5) * (w - 0.5);
            }
            let nf = n as f64;
            let mean = sum / nf;
            let se = (sum2 / nf / nf).sqrt();
            assert!(
                (mean - 0.5).abs() < 4.0 * se,
                "{spec:?}: mean {mean} (se {se})"
            );
        }
        assert!(OmegaSpec::SymmetricBeta { alpha: 0.0 }.validate().is_err());
    }

    #[test]
    fn ensemble_constructors_validate() {
        assert!(ParticleEnsemble::from_wealths(vec![], 1).is_err());
        assert!(ParticleEnsemble::from_wealths(vec![1.0, -0.1], 1).is_err());
        assert!(ParticleEnsemble::from_wealths(vec![f64::NAN], 1).is_err());
        assert!(ParticleEnsemble::sample_uniform(0, 0.0, 1.0, 1).is_err());
        assert!(ParticleEnsemble::sample_uniform(10, -1.0, 1.0, 1).is_err());
        assert!(ParticleEnsemble::constant(0, 1.0, 1).is_err());
        let e = ParticleEnsemble::sample_uniform(1000, 0.5, 1.5, 7).unwrap();
        assert_eq!(e.n(), 1000);
        assert!(e.wealths().iter().all(|&w| (0.5..1.5).contains(&w)));
        assert_eq!(e.time(), 0.0);
        let c = ParticleEnsemble::constant(5, 2.0, 1).unwrap();
        assert_eq!(c.total_wealth(), 10.0);
        assert_eq!(c.mean(), 2.0);
    }

    #[test]
    fn moment_se_matches_explicit_jackknife() {
        // Oracle: brute-force delete-1 jackknife SE equals s/sqrt(n).
        let mut rng = rng(15);
        let xs: Vec<f64> = (0..60).map(|_| rng.gen_range(0.1..4.0)).collect();
        let ens = ParticleEnsemble::from_wealths(xs.clone(), 1).unwrap();
        let alpha = 1.7;
        let (m, se) = ens.moment_with_se(alpha);
        let vals: Vec<f64> = xs.iter().map(|&x| x.powf(alpha)).collect();
        let n = vals.len() as f64;
        let total: f64 = vals.iter().sum();
        let full = total / n;
        assert_relative_eq!(m, full, max_relative = 1e-14);
        let mut ssq = 0.0;
        for &v in &vals {
            let loo = (total - v) / (n - 1.0);
            ssq += (loo - full) * (loo - full);
        }
        let jack = ((n - 1.0) / n * ssq).sqrt();
        assert_relative_eq!(se, jack, max_relative = 1e-12);
    }

    #[test]
    fn variance_estimate_is_calibrated() {
        let mut rng = rng(16);
        // Uniform[0,1): variance 1/12.
        let xs: Vec<f64> = (0..50_000).map(|_| rng.gen::<f64>()).collect();
        let ens = ParticleEnsemble::from_wealths(xs, 1).unwrap();
        let (v, se) = ens.variance_with_se();
        assert!(se > 0.0);
        assert!(
            (v - 1.0 / 12.0).abs() < 4.0 * se,
            "variance {v} vs 1/12 (se {se})"
        );
    }

    #[test]
    fn histogram_carries_time_and_outside_count() {
        let grid = Arc::new(Grid::uniform(0.0, 1.0, 10).unwrap());
        let mut ens = ParticleEnsemble::from_wealths(vec![0.05, 0.15, 0.5, 2.0], 3).unwrap();
        ens.time = 1.25;
        let (d, outside) = ens.histogram_on(&grid);
        assert_eq!(outside, 1);
        assert_eq!(d.time, 1.25);
        assert_relative_eq!(d.mass(), 0.75, max_relative = 1e-12);
        let (s, _) = ens.smoothed_histogram_on(&grid);
        assert_relative_eq!(s.mass(), 1.0, max_relative = 1e-12);
    }
}
