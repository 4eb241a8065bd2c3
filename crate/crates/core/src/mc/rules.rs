//! Trade rules of the kinetic models and their admissibility checks.

use super::{EtaSampler, EtaSpec, MarketSampler, MarketSpec, OmegaSampler, OmegaSpec};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

/// Binary/linear trade rules. `LinearMarket` trades against a sampled market
/// partner; the other three act on disjoint particle pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionRule {
    /// `w* = (1 - lambda) w + lambda v + eta w`, `v` drawn from the market.
    LinearMarket {
        lambda: f64,
        eta: EtaSpec,
        market: MarketSpec,
    },
    /// `w_a* = omega (w_a + w_b)`, `w_b* = (1 - omega)(w_a + w_b)`:
    /// pointwise-conservative pure gambling.
    GamblingConservative { omega: OmegaSpec },
    /// `w_i* = (w_a + w_b) / (4 theta_i)`, `theta_i ~ Beta(a + 1/2, a - 1/2)`
    /// i.i.d.; conserves the pair sum in expectation since
    /// `E[1/theta] = (alpha + beta - 1)/(alpha - 1) = 2` for those shapes.
    GamblingMeanConservative { a: f64 },
    /// `v* = (1 - lambda) v + lambda w + eta_1 v`,
    /// `w* = (1 - lambda) w + lambda v + eta_2 w`, shocks i.i.d.
    BinaryCpt { lambda: f64, eta: EtaSpec },
}

impl InteractionRule {
    pub fn name(&self) -> &'static str {
        match self {
            InteractionRule::LinearMarket { .. } => "linear-market",
            InteractionRule::GamblingConservative { .. } => "gambling-conservative",
            InteractionRule::GamblingMeanConservative { .. } => "gambling-mean-conservative",
            InteractionRule::BinaryCpt { .. } => "binary-cpt",
        }
    }

    /// Linear rules draw a market partner per particle; bilinear rules pair
    /// particles.
    pub fn is_linear(&self) -> bool {
        matches!(self, InteractionRule::LinearMarket { .. })
    }

    /// Checks the rule against the model constants: `lambda` and the shock
    /// variance must match `params` (`mu = 2 lambda / sigma` couples them to
    /// the limiting equation), the shock support must keep wealths
    /// nonnegative, and a two-point shock must also respect the risk bound
    /// `r < lambda`. Both support constraints are reported together when
    /// violated, because for `lambda > 1/2` they genuinely conflict.
    pub fn validate_for(&self, params: &ModelParams) -> Result<()> {
        match self {
            InteractionRule::LinearMarket {
                lambda,
                eta,
                market,
            } => {
                check_lambda_sigma(*lambda, eta, params)?;
                market.validate()
            }
            InteractionRule::GamblingConservative { omega } => omega.validate(),
            InteractionRule::GamblingMeanConservative { a } => {
                if !(*a > 1.0 && a.is_finite()) {
                    return Err(Error::InvalidParam(format!(
                        "mean-conservative gambling needs a > 1 (theta ~ Beta(a + 1/2, a - 1/2)), got a = {a}"
                    )));
                }
                Ok(())
            }
            InteractionRule::BinaryCpt { lambda, eta } => check_lambda_sigma(*lambda, eta, params),
        }
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn check_lambda_sigma(lambda: f64, eta: &EtaSpec, params: &ModelParams) -> Result<()> {
    if !rel_eq(lambda, params.lambda()) {
        return Err(Error::InvalidParam(format!(
            "rule lambda {lambda} differs from model lambda {}",
            params.lambda()
        )));
    }
    eta.validate()?;
    if !rel_eq(eta.variance(), params.sigma()) {
        return Err(Error::InvalidParam(format!(
            "shock variance {} differs from model sigma {}",
            eta.variance(),
            params.sigma()
        )));
    }
    check_support(eta, lambda)
}

/// Positivity needs `sup |eta| <= 1 - lambda`; a two-point shock must also
/// obey the risk bound `r < lambda`.
fn check_support(eta: &EtaSpec, lambda: f64) -> Result<()> {
    let cap = 1.0 - lambda;
    match *eta {
        EtaSpec::TwoPoint { r } => {
            if !(r < lambda && r <= cap) {
                return Err(Error::InvalidParam(format!(
                    "two-point shock r = {r} must satisfy both the risk bound r < lambda = {lambda} \
                     and the positivity bound r <= 1 - lambda = {cap}; for lambda > 1/2 no r in \
                     [1 - lambda, lambda) satisfies both"
                )));
            }
        }
        EtaSpec::TruncatedGaussian { cutoff, .. } => {
            if !(cutoff <= cap) {
                return Err(Error::InvalidParam(format!(
                    "shock cutoff {cutoff} exceeds the positivity bound 1 - lambda = {cap}"
                )));
            }
        }
    }
    Ok(())
}

/// Grazing runs rescale `lambda` and `eta` after the base rule has already
/// validated; the scaled pair only needs the positivity bound re-checked.
/// (The risk bound `r < lambda` is a statement about the base parameters and
/// fails under the scaling `r sqrt(eps) < eps lambda` as `eps -> 0` by
/// construction.)
pub(crate) fn check_scaled_positivity(eta: &EtaSpec, lambda: f64) -> Result<()> {
    if eta.max_abs() > 1.0 - lambda {
        return Err(Error::InvalidParam(format!(
            "scaled shock bound {} exceeds the positivity bound 1 - lambda = {}",
            eta.max_abs(),
            1.0 - lambda
        )));
    }
    Ok(())
}

/// A rule with its samplers prebuilt for the sweep loop.
#[derive(Debug, Clone)]
pub(crate) enum PreparedRule {
    Linear {
        lambda: f64,
        eta: EtaSampler,
        market: MarketSampler,
    },
    Conservative {
        omega: OmegaSampler,
    },
    MeanConservative {
        theta: rand_distr::Beta<f64>,
    },
    Cpt {
        lambda: f64,
        eta: EtaSampler,
    },
}

impl PreparedRule {
    pub(crate) fn prepare(rule: &InteractionRule) -> Result<Self> {
        Ok(match rule {
            InteractionRule::LinearMarket {
                lambda,
                eta,
                market,
            } => PreparedRule::Linear {
                lambda: *lambda,
                eta: eta.sampler()?,
                market: market.sampler()?,
            },
            InteractionRule::GamblingConservative { omega } => PreparedRule::Conservative {
                omega: omega.sampler()?,
            },
            InteractionRule::GamblingMeanConservative { a } => PreparedRule::MeanConservative {
                theta: rand_distr::Beta::new(a + 0.5, a - 0.5)
                    .map_err(|e| Error::InvalidParam(format!("theta distribution: {e}")))?,
            },
            InteractionRule::BinaryCpt { lambda, eta } => PreparedRule::Cpt {
                lambda: *lambda,
                eta: eta.sampler()?,
            },
        })
    }

    /// Applies one accepted pair trade, returning the post-trade wealths.
    pub(crate) fn apply_pair<R: Rng + ?Sized>(&self, wa: f64, wb: f64, rng: &mut R) -> (f64, f64) {
        match self {
            PreparedRule::Linear { .. } => unreachable!("linear rule has no pair update"),
            PreparedRule::Conservative { omega } => {
                let s = wa + wb;
                let a = omega.sample(rng) * s;
                conserving_split(s, a)
            }
            PreparedRule::MeanConservative { theta } => {
                let s = wa + wb;
                let ta = positive_theta(theta, rng);
                let tb = positive_theta(theta, rng);
                (s / (4.0 * ta), s / (4.0 * tb))
            }
            PreparedRule::Cpt { lambda, eta } => {
                let e1 = eta.sample(rng);
                let e2 = eta.sample(rng);
                (
                    (1.0 - lambda + e1) * wa + lambda * wb,
                    (1.0 - lambda + e2) * wb + lambda * wa,
                )
            }
        }
    }
}

/// Splits `s >= 0` into `(a, b)` with `a + b == s` bit-for-bit.
///
/// `b = s - a` alone is not enough: when the share `a` is below `s / 2`, low
/// bits of `a` can be rounded away in the subtraction, leaving `a + b` on an
/// exact half-ulp tie that rounds to a neighbour of `s`. In that case `b`
/// lies in `[s/2, s]`, so `s - b` is exact by Sterbenz's lemma; re-deriving
/// the share from the rounded complement restores the sum, moving the share
/// by at most one ulp. (For `a >= s/2` the subtraction itself is exact and
/// the first branch always holds.)
fn conserving_split(s: f64, a: f64) -> (f64, f64) {
    let b = s - a;
    if a + b == s {
        return (a, b);
    }
    let a = s - b;
    debug_assert!(a + b == s, "Sterbenz repair failed for s = {s:e}");
    (a, b)
}

fn positive_theta<R: Rng + ?Sized>(theta: &rand_distr::Beta<f64>, rng: &mut R) -> f64 {
    loop {
        let t = theta.sample(rng);
        if t > 0.0 {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream_rng;

    fn params(lambda: f64, sigma: f64) -> ModelParams {
        ModelParams::new(lambda, sigma, 1.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn linear_rule_validation() {
        let p = params(0.2, 0.0225);
        let good = InteractionRule::LinearMarket {
            lambda: 0.2,
            eta: EtaSpec::TwoPoint { r: 0.15 },
            market: MarketSpec::Gamma {
                mean: 1.0,
                shape: 2.0,
            },
        };
        good.validate_for(&p).unwrap();

        let wrong_lambda = InteractionRule::LinearMarket {
            lambda: 0.25,
            eta: EtaSpec::TwoPoint { r: 0.15 },
            market: MarketSpec::Gamma {
                mean: 1.0,
                shape: 2.0,
            },
        };
        assert!(wrong_lambda.validate_for(&p).is_err());

        let wrong_sigma = InteractionRule::LinearMarket {
            lambda: 0.2,
            eta: EtaSpec::TwoPoint { r: 0.1 },
            market: MarketSpec::Gamma {
                mean: 1.0,
                shape: 2.0,
            },
        };
        assert!(wrong_sigma.validate_for(&p).is_err());
    }

    #[test]
    fn risk_and_positivity_bounds_both_enforced() {
        // r >= lambda: risk bound violated even though positivity holds.
        let p1 = params(0.2, 0.09);
        let r1 = InteractionRule::BinaryCpt {
            lambda: 0.2,
            eta: EtaSpec::TwoPoint { r: 0.3 },
        };
        let err = r1.validate_for(&p1).unwrap_err().to_string();
        assert!(err.contains("risk bound"), "{err}");
        assert!(err.contains("positivity bound"), "{err}");

        // lambda > 1/2: every r in [1 - lambda, lambda) violates positivity.
        let p2 = params(0.7, 0.16);
        let r2 = InteractionRule::BinaryCpt {
            lambda: 0.7,
            eta: EtaSpec::TwoPoint { r: 0.4 },
        };
        assert!(r2.validate_for(&p2).is_err());

        // Truncated Gaussian has only the positivity constraint: a cutoff
        // above 1 - lambda fails.
        let p3 = params(0.4, 0.05);
        let r3 = InteractionRule::LinearMarket {
            lambda: 0.4,
            eta: EtaSpec::TruncatedGaussian {
                variance: 0.05,
                cutoff: 0.65,
            },
            market: MarketSpec::Gamma {
                mean: 1.0,
                shape: 2.0,
            },
        };
        assert!(r3.validate_for(&p3).is_err());
        let ok = InteractionRule::LinearMarket {
            lambda: 0.4,
            eta: EtaSpec::TruncatedGaussian {
                variance: 0.05,
                cutoff: 0.6,
            },
            market: MarketSpec::Gamma {
                mean: 1.0,
                shape: 2.0,
            },
        };
        ok.validate_for(&p3).unwrap();
    }

    #[test]
    fn scaled_positivity_check_ignores_risk_bound() {
        // sqrt(eps) r < eps lambda would fail, but positivity is what matters.
        let eta = EtaSpec::TwoPoint { r: 0.15 }.scaled(0.04);
        check_scaled_positivity(&eta, 0.04 * 0.2).unwrap();
        let bad = EtaSpec::TwoPoint { r: 1.2 };
        assert!(check_scaled_positivity(&bad, 0.1).is_err());
    }

    #[test]
    fn mean_conservative_needs_a_above_one() {
        let p = params(0.2, 0.0225);
        assert!(InteractionRule::GamblingMeanConservative { a: 1.0 }
            .validate_for(&p)
            .is_err());
        assert!(InteractionRule::GamblingMeanConservative { a: 0.9 }
            .validate_for(&p)
            .is_err());
        InteractionRule::GamblingMeanConservative { a: 3.0 }
            .validate_for(&p)
            .unwrap();
    }

    #[test]
    fn conservative_pairs_conserve_exactly() {
        let rule = InteractionRule::GamblingConservative {
            omega: OmegaSpec::Uniform,
        };
        let prepared = PreparedRule::prepare(&rule).unwrap();
        let mut rng = substream_rng(21, 0);
        for _ in 0..100_000 {
            let wa = rng.gen_range(0.0..5.0);
            let wb = rng.gen_range(0.0..5.0);
            let (na, nb) = prepared.apply_pair(wa, wb, &mut rng);
            assert!(na >= 0.0 && nb >= 0.0);
            assert_eq!(na + nb, wa + wb, "pair sum must be conserved exactly");
        }
    }

    #[test]
    fn mean_conservative_share_has_expectation_half() {
        // E[1/(4 theta)] = 1/2 for theta ~ Beta(a + 1/2, a - 1/2).
        let rule = InteractionRule::GamblingMeanConservative { a: 3.0 };
        let prepared = PreparedRule::prepare(&rule).unwrap();
        let mut rng = substream_rng(22, 0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let (na, nb) = prepared.apply_pair(1.0, 1.0, &mut rng);
            assert!(na > 0.0 && nb > 0.0);
            // Each share of the unit-sum pair equals omega_i = 1/(4 theta_i) * 2.
            for x in [na, nb] {
                let omega = x / 2.0;
                sum += omega;
                sum2 += omega * omega;
            }
        }
        let nf = (2 * n) as f64;
        let mean = sum / nf;
        let se = ((sum2 / nf - mean * mean) / nf).sqrt();
        assert!(
            (mean - 0.5).abs() < 4.0 * se,
            "share mean {mean} vs 1/2 (se {se})"
        );
    }

    #[test]
    fn cpt_pairs_stay_nonnegative_and_conserve_in_mean() {
        let rule = InteractionRule::BinaryCpt {
            lambda: 0.2,
            eta: EtaSpec::TwoPoint { r: 0.15 },
        };
        let prepared = PreparedRule::prepare(&rule).unwrap();
        let mut rng = substream_rng(23, 0);
        let n = 100_000;
        let mut drift_sum = 0.0;
        let mut drift_sum2 = 0.0;
        for _ in 0..n {
            let wa = rng.gen_range(0.0..3.0);
            let wb = rng.gen_range(0.0..3.0);
            let (na, nb) = prepared.apply_pair(wa, wb, &mut rng);
            assert!(na >= 0.0 && nb >= 0.0, "({wa},{wb}) -> ({na},{nb})");
            let d = (na + nb) - (wa + wb);
            drift_sum += d;
            drift_sum2 += d * d;
        }
        let nf = n as f64;
        let mean = drift_sum / nf;
        let se = ((drift_sum2 / nf - mean * mean) / nf).sqrt();
        assert!(
            mean.abs() < 3.0 * se,
            "pair-sum drift {mean} vs se {se} should be centered"
        );
    }
}
