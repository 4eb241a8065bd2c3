//! Sweep drivers: fixed and adaptive schedules, observation, grazing-scaled
//! runs, and parallel replicas.

use super::rules::{check_scaled_positivity, PreparedRule};
use super::{kernel_value, EtaSampler, InteractionRule, MarketSampler, ParticleEnsemble};
use crate::analytic::AnalyticDensity;
use crate::diagnostics::{entropy_report_vs_analytic, DecayRow, DecaySeries};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::rng::substream_seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// How a sweep consumes its time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSchedule {
    /// One thinning pass of length `dt`; errors if `dt` exceeds the
    /// acceptance bound.
    Fixed,
    /// Bilinear rules only: splits `dt` into substeps `h <= safety / B` with
    /// the rejection bound `B = kappa w_max^{2 delta}` recomputed and a fresh
    /// pairing drawn per substep, so the run tracks the current maximum
    /// wealth instead of erroring.
    Adaptive { safety: f64 },
}

/// Sweep-loop options. `t_end` is measured on the output clock — the
/// macroscopic one for grazing runs, where `dt` stays the kinetic step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every this many sweeps (>= 1); initial and final states are
    /// always recorded.
    pub snapshot_every: usize,
    pub schedule: SweepSchedule,
}

/// Optional density-level observation: histogram the ensemble on `grid` and
/// report entropy, weighted Fisher information, and L1 distance against the
/// analytic reference.
#[derive(Debug, Clone)]
pub struct McObserver {
    pub grid: Arc<Grid>,
    pub reference: AnalyticDensity,
    /// Kernel exponent for the Fisher weight `w^{2+delta}`.
    pub delta: f64,
    /// Convexity constant for the reported LSI ratio, if applicable.
    pub rho: Option<f64>,
}

/// Sample moments at one snapshot, with jackknife standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub m1: f64,
    pub se1: f64,
    pub m2: f64,
    pub se2: f64,
}

/// Output of a sweep-loop run.
#[derive(Debug, Clone, Serialize)]
pub struct McSeries {
    pub moments: Vec<MomentRow>,
    /// Present when an observer was supplied.
    pub decay: Option<DecaySeries>,
    /// Grazing runs only: the sampled remainder statistic
    /// `eps^2 kappa lambda^2 <(v w)^delta (v - w)^2>` over all candidates.
    pub grazing_remainder: Option<f64>,
}

struct GrazingState {
    eps: f64,
    lambda0: f64,
    sum: f64,
    count: u64,
}

/// Runs the interaction dynamics to `t_end`, recording snapshots.
pub fn run(
    ens: &mut ParticleEnsemble,
    rule: &InteractionRule,
    params: &ModelParams,
    opts: &McOptions,
    obs: Option<&McObserver>,
) -> Result<McSeries> {
    rule.validate_for(params)?;
    check_options(opts, rule.is_linear())?;
    let prepared = PreparedRule::prepare(rule)?;
    drive(ens, &prepared, params, opts, obs, None)
}

/// Grazing-scaled run: `lambda -> eps lambda`, `eta -> sqrt(eps) eta`, and
/// the clock advances by `eps dt` per sweep so `t_end` and all reported times
/// are macroscopic. Only the rules with a saving propensity (linear-market
/// and binary trades) admit the scaling.
pub fn run_grazing(
    ens: &mut ParticleEnsemble,
    rule: &InteractionRule,
    params: &ModelParams,
    eps: f64,
    opts: &McOptions,
    obs: Option<&McObserver>,
) -> Result<McSeries> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParam(format!(
            "grazing parameter eps must lie in (0, 1/2], got {eps}"
        )));
    }
    rule.validate_for(params)?;
    let scaled_params = params.grazing_scaled(eps)?;
    let scaled_rule = match rule {
        InteractionRule::LinearMarket {
            lambda,
            eta,
            market,
        } => InteractionRule::LinearMarket {
            lambda: eps * lambda,
            eta: eta.scaled(eps),
            market: *market,
        },
        InteractionRule::BinaryCpt { lambda, eta } => InteractionRule::BinaryCpt {
            lambda: eps * lambda,
            eta: eta.scaled(eps),
        },
        other => {
            return Err(Error::InvalidParam(format!(
                "grazing scaling applies to trade rules with a saving propensity, not {}",
                other.name()
            )))
        }
    };
    // The base rule validated above; the scaled pair re-checks positivity
    // only (see check_scaled_positivity).
    match &scaled_rule {
        InteractionRule::LinearMarket { lambda, eta, .. }
        | InteractionRule::BinaryCpt { lambda, eta } => check_scaled_positivity(eta, *lambda)?,
        _ => unreachable!(),
    }
    check_options(opts, scaled_rule.is_linear())?;
    let prepared = PreparedRule::prepare(&scaled_rule)?;
    let grazing = GrazingState {
        eps,
        lambda0: params.lambda(),
        sum: 0.0,
        count: 0,
    };
    drive(ens, &prepared, &scaled_params, opts, obs, Some(grazing))
}

fn check_options(opts: &McOptions, linear: bool) -> Result<()> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "dt must be positive, got {}",
            opts.dt
        )));
    }
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "time horizon must be positive, got {}",
            opts.t_end
        )));
    }
    if opts.snapshot_every == 0 {
        return Err(Error::InvalidParam(
            "snapshot_every must be at least 1".to_string(),
        ));
    }
    if let SweepSchedule::Adaptive { safety } = opts.schedule {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "adaptive safety factor must lie in (0, 1], got {safety}"
            )));
        }
        if linear {
            return Err(Error::InvalidParam(
                "adaptive substepping needs the pairwise rejection bound; the linear-market \
                 kernel is unbounded over market draws — use a fixed schedule with a smaller dt"
                    .to_string(),
            ));
        }
    }
    Ok(())
}

fn drive(
    ens: &mut ParticleEnsemble,
    prepared: &PreparedRule,
    params: &ModelParams,
    opts: &McOptions,
    obs: Option<&McObserver>,
    mut grazing: Option<GrazingState>,
) -> Result<McSeries> {
    let time_scale = grazing.as_ref().map_or(1.0, |g| g.eps);
    let per_sweep = time_scale * opts.dt;
    let n_sweeps = ((opts.t_end / per_sweep).round() as u64).max(1);
    let t0 = ens.time;
    let mut series = McSeries {
        moments: Vec::new(),
        decay: obs.map(|_| DecaySeries::new()),
        grazing_remainder: None,
    };
    record(ens, obs, &mut series)?;
    for k in 1..=n_sweeps {
        one_sweep(ens, prepared, params, opts, grazing.as_mut())?;
        ens.sweep += 1;
        ens.time = t0 + per_sweep * k as f64;
        if k % opts.snapshot_every as u64 == 0 || k == n_sweeps {
            record(ens, obs, &mut series)?;
        }
    }
    if let Some(g) = grazing {
        series.grazing_remainder =
            Some(g.eps * g.eps * params.kappa_kernel() * g.lambda0 * g.lambda0 * g.sum
                / g.count.max(1) as f64);
    }
    Ok(series)
}

fn record(ens: &ParticleEnsemble, obs: Option<&McObserver>, series: &mut McSeries) -> Result<()> {
    let (m1, se1) = ens.moment_with_se(1.0);
    let (m2, se2) = ens.moment_with_se(2.0);
    series.moments.push(MomentRow {
        t: ens.time,
        m1,
        se1,
        m2,
        se2,
    });
    if let Some(obs) = obs {
        let (raw, _) = ens.histogram_on(&obs.grid);
        let mass = raw.mass();
        let centers = obs.grid.centers();
        let widths = obs.grid.widths();
        let mut l1 = 0.0;
        for i in 0..raw.values.len() {
            l1 += (raw.values[i] - obs.reference.ln_pdf_unchecked(centers[i]).exp()).abs()
                * widths[i];
        }
        // Account for what both sides hold beyond the grid window.
        l1 += (1.0 - mass) + obs.reference.mass_outside(obs.grid.lo(), obs.grid.hi())?;
        let (smooth, _) = ens.smoothed_histogram_on(&obs.grid);
        let rep = entropy_report_vs_analytic(&smooth, &obs.reference, obs.delta, obs.rho)?;
        series
            .decay
            .as_mut()
            .expect("decay series allocated with observer")
            .push(DecayRow {
                t: ens.time,
                mass,
                mean: m1,
                m2,
                entropy: rep.relative_entropy,
                fisher: rep.fisher,
                l1,
            });
    }
    Ok(())
}

fn one_sweep(
    ens: &mut ParticleEnsemble,
    prepared: &PreparedRule,
    params: &ModelParams,
    opts: &McOptions,
    mut grazing: Option<&mut GrazingState>,
) -> Result<()> {
    match prepared {
        PreparedRule::Linear {
            lambda,
            eta,
            market,
        } => linear_sweep(ens, *lambda, eta, market, params, opts.dt, grazing),
        _ => match opts.schedule {
            SweepSchedule::Fixed => bilinear_pass(ens, prepared, params, opts.dt, grazing),
            SweepSchedule::Adaptive { safety } => {
                let mut remaining = opts.dt;
                while remaining > 0.0 {
                    let bound = sweep_bound(ens, params);
                    let h = if bound * remaining <= safety {
                        remaining
                    } else {
                        safety / bound
                    };
                    bilinear_pass(ens, prepared, params, h, grazing.as_deref_mut())?;
                    remaining -= h;
                }
                Ok(())
            }
        },
    }
}

/// Per-sweep rejection bound `B = kappa w_max^{2 delta}`.
fn sweep_bound(ens: &ParticleEnsemble, params: &ModelParams) -> f64 {
    let wmax = ens.wealths.iter().copied().fold(0.0_f64, f64::max);
    kernel_value(wmax, wmax, params.delta(), params.kappa_kernel())
}

/// `(v w)^delta (v - w) <= v^{1 + 2 delta}` up to rounding slack; checked on
/// a sample of candidates each sweep.
fn kernel_inequality_ok(v: f64, w: f64, delta: f64) -> bool {
    let lhs = (v * w).powf(delta) * (v - w);
    let rhs = v.powf(1.0 + 2.0 * delta);
    lhs <= rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

fn linear_sweep(
    ens: &mut ParticleEnsemble,
    lambda: f64,
    eta: &EtaSampler,
    market: &MarketSampler,
    params: &ModelParams,
    dt: f64,
    mut grazing: Option<&mut GrazingState>,
) -> Result<()> {
    let delta = params.delta();
    let kappa = params.kappa_kernel();
    for i in 0..ens.wealths.len() {
        let w = ens.wealths[i];
        let v = market.sample(&mut ens.rng);
        let kern = kernel_value(v, w, delta, kappa);
        let p = dt * kern;
        if p > 1.0 {
            return Err(Error::AcceptanceOverflow {
                sweep: ens.sweep,
                probability: p,
                dt_max: dt / p,
            });
        }
        if let Some(g) = grazing.as_deref_mut() {
            g.sum += (kern / kappa) * (v - w) * (v - w);
            g.count += 1;
        }
        if i % 64 == 0 {
            debug_assert!(
                kernel_inequality_ok(v, w, delta),
                "kernel inequality violated at v={v}, w={w}, delta={delta}"
            );
        }
        if ens.rng.gen::<f64>() < p {
            let e = eta.sample(&mut ens.rng);
            let nw = (1.0 - lambda + e) * w + lambda * v;
            debug_assert!(nw >= 0.0, "negative post-trade wealth {nw}");
            ens.wealths[i] = nw;
        }
    }
    Ok(())
}

fn bilinear_pass(
    ens: &mut ParticleEnsemble,
    prepared: &PreparedRule,
    params: &ModelParams,
    dt: f64,
    mut grazing: Option<&mut GrazingState>,
) -> Result<()> {
    let n = ens.wealths.len();
    if n < 2 {
        return Err(Error::InvalidParam(
            "bilinear sweeps need at least two particles".to_string(),
        ));
    }
    let bound = sweep_bound(ens, params);
    let p_bound = dt * bound;
    if p_bound > 1.0 {
        return Err(Error::AcceptanceOverflow {
            sweep: ens.sweep,
            probability: p_bound,
            dt_max: 1.0 / bound,
        });
    }
    let delta = params.delta();
    let kappa = params.kappa_kernel();
    let mut idx: Vec<u32> = (0..n as u32).collect();
    idx.shuffle(&mut ens.rng);
    for k in 0..n / 2 {
        let ia = idx[2 * k] as usize;
        let ib = idx[2 * k + 1] as usize;
        let wa = ens.wealths[ia];
        let wb = ens.wealths[ib];
        let kern = kernel_value(wa, wb, delta, kappa);
        if let Some(g) = grazing.as_deref_mut() {
            g.sum += (kern / kappa) * (wa - wb) * (wa - wb);
            g.count += 1;
        }
        if k % 64 == 0 {
            debug_assert!(
                kern <= bound * (1.0 + 1e-12),
                "kernel {kern} above sweep bound {bound}"
            );
            debug_assert!(
                kernel_inequality_ok(wa, wb, delta),
                "kernel inequality violated at v={wa}, w={wb}, delta={delta}"
            );
        }
        if ens.rng.gen::<f64>() < dt * kern {
            let (na, nb) = prepared.apply_pair(wa, wb, &mut ens.rng);
            debug_assert!(na >= 0.0 && nb >= 0.0, "negative pair ({na}, {nb})");
            ens.wealths[ia] = na;
            ens.wealths[ib] = nb;
        }
    }
    Ok(())
}

/// Runs `replicas` independent jobs in parallel; job `i` receives the
/// substream seed derived from `(base_seed, i)` and results keep replica
/// order.
pub fn run_replicas<T, F>(base_seed: u64, replicas: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    if replicas == 0 {
        return Err(Error::InvalidParam(
            "at least one replica is required".to_string(),
        ));
    }
    (0..replicas)
        .into_par_iter()
        .map(|i| job(i, substream_seed(base_seed, i as u64)))
        .collect()
}

/// Mean and scatter standard error `sd / sqrt(R)` across replica values.
pub fn replica_scatter(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}
