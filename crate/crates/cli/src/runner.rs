//! Mode execution: builds the core objects from a validated configuration,
//! drives the run, and writes every output through a single collector thread
//! (replicas run on the worker pool; files are written after the join, so no
//! two writers ever interleave).

use crate::config::{
    check_second_moment_constraint, ExperimentConfig, GridConfig, InitialConfig, Mode, TimeScale,
};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use econokin_core::analytic::{ggamma_params, rho_delta, AnalyticDensity, DensityInput};
use econokin_core::diagnostics::{
    entropy_report_transformed, entropy_report_vs_analytic, lsi_audit, DecaySeries,
};
use econokin_core::fp::{LinearFp, NonlinearFp, RunOptions, TransformedFp};
use econokin_core::grid::{Grid, GridDensity};
use econokin_core::io::{self, FileHeader};
use econokin_core::mc::{
    replica_scatter, run_replicas, InteractionRule, McObserver, McOptions, MomentRow,
    ParticleEnsemble,
};
use econokin_core::rng::substream_seed;
use econokin_core::{Error as CoreError, ModelParams};
use std::path::PathBuf;
use std::sync::Arc;

/// Everything a mode needs to execute: the parsed configuration, the built
/// model parameters, and the effective seed/replica/worker settings after
/// command-line overrides.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub params: ModelParams,
    pub hash: String,
    pub out: PathBuf,
    pub seed: u64,
    pub replicas: usize,
    pub workers: usize,
}

pub fn run(ctx: &RunContext) -> CliResult<()> {
    if ctx.replicas == 0 {
        return Err(CliError::Config(
            "replicas must be at least 1".to_string(),
        ));
    }
    if !ctx.config.mode.is_stochastic() && ctx.replicas != 1 {
        return Err(CliError::Config(format!(
            "mode `{}` is deterministic; replicas must be 1",
            ctx.config.mode.name()
        )));
    }
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", ctx.out.display())))?;
    let mut manifest = RunManifest::start(ctx.config.mode.name(), &ctx.hash, ctx.seed, ctx.workers);
    match ctx.config.mode {
        Mode::Steady => steady(ctx, &mut manifest)?,
        Mode::FpLinear | Mode::FpNonlinear | Mode::FpTransformed => fp_run(ctx, &mut manifest)?,
        Mode::McLinear | Mode::McGambling | Mode::McBinary => mc_run(ctx, &mut manifest)?,
        Mode::GrazingStudy => grazing_study(ctx, &mut manifest)?,
        Mode::LsiAudit => lsi_audit_run(ctx, &mut manifest)?,
    }
    manifest.finish_and_write(&ctx.out)
}

fn base_header(ctx: &RunContext) -> FileHeader {
    FileHeader::new(ctx.hash.clone(), ctx.seed).with("mode", ctx.config.mode.name())
}

fn grid_config(ctx: &RunContext) -> GridConfig {
    ctx.config.grid.unwrap_or(GridConfig::Auto { cells: 512 })
}

/// Equilibrium of the linear model in the wealth coordinate.
fn equilibrium_x(p: &ModelParams) -> CliResult<AnalyticDensity> {
    Ok(AnalyticDensity::inverse_gamma_delta(
        p.mu(),
        p.m(),
        p.delta(),
    )?)
}

/// Equilibrium in the unit-diffusion coordinate: generalized Gamma for
/// `delta > 0`, the log-transformed profile for the Maxwellian reference.
fn equilibrium_y(p: &ModelParams) -> CliResult<AnalyticDensity> {
    if p.delta() > 0.0 {
        let g = ggamma_params(p.delta(), p.mu(), p.m())?;
        Ok(AnalyticDensity::generalized_gamma(
            g.kappa_shape,
            g.theta,
            g.nu,
        )?)
    } else {
        Ok(AnalyticDensity::log_transformed_delta0(p.mu(), p.m())?)
    }
}

/// Uniform density on `[lo, hi)` restricted to the grid and renormalized.
/// `nonnegative` enforces `lo >= 0` (wealth coordinate); the transformed
/// coordinate may be negative.
fn uniform_density(
    grid: &Arc<Grid>,
    lo: f64,
    hi: f64,
    nonnegative: bool,
) -> CliResult<GridDensity> {
    if !(hi > lo && hi.is_finite() && lo.is_finite()) || (nonnegative && lo < 0.0) {
        return Err(CliError::Config(format!(
            "uniform initial condition needs {} lo < hi, got [{lo}, {hi}]",
            if nonnegative { "0 <=" } else { "finite" }
        )));
    }
    let mut f = GridDensity::from_fn(grid, |w| if w >= lo && w < hi { 1.0 } else { 0.0 });
    f.normalize()
        .map_err(|_| CliError::Config(format!(
            "uniform initial condition [{lo}, {hi}) does not overlap the grid [{}, {}]",
            grid.lo(),
            grid.hi()
        )))?;
    Ok(f)
}

/// Fails with a config error when a required hypothesis of the theory does
/// not hold for the supplied initial density.
fn validate_initial(f0: &GridDensity, p: &ModelParams) -> CliResult<()> {
    let report = econokin_core::analytic::validate_initial_condition(DensityInput::Grid(f0), p)?;
    if !report.all_required_satisfied() {
        let failed: Vec<String> = report
            .failed()
            .iter()
            .filter(|c| c.required)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(CliError::Config(format!(
            "initial density violates required hypotheses — {}",
            failed.join("; ")
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// steady
// ---------------------------------------------------------------------------

fn steady(ctx: &RunContext, manifest: &mut RunManifest) -> CliResult<()> {
    let p = &ctx.params;
    let fx_target = equilibrium_x(p)?;
    let x_grid = grid_config(ctx).build(&fx_target, p.m())?;
    let fx = GridDensity::from_analytic_normalized(&x_grid, &fx_target)?;
    io::write_density_csv(
        &ctx.out.join("steady_x.csv"),
        &base_header(ctx)
            .with("coordinate", "x")
            .with("family", fx_target.name()),
        &fx,
    )?;
    manifest.push_file("steady_x.csv");

    let y_grid = Arc::new(x_grid.transformed(p.delta())?);
    let gy_target = equilibrium_y(p)?;
    let gy = GridDensity::from_analytic_normalized(&y_grid, &gy_target)?;
    io::write_density_csv(
        &ctx.out.join("steady_y.csv"),
        &base_header(ctx)
            .with("coordinate", "y")
            .with("family", gy_target.name()),
        &gy,
    )?;
    manifest.push_file("steady_y.csv");

    if p.delta() > 0.0 {
        manifest.rho_delta = Some(rho_delta(p.delta(), p.mu(), p.m())?);
    }
    manifest.set("mu", p.mu())?;
    manifest.set("x_family", fx_target.name())?;
    manifest.set("y_family", gy_target.name())?;
    manifest.set(
        "x_mass_outside_grid",
        fx_target.mass_outside(x_grid.lo(), x_grid.hi())?,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Fokker-Planck modes
// ---------------------------------------------------------------------------

enum FpSolver {
    Linear(LinearFp),
    Nonlinear(NonlinearFp),
    Transformed(TransformedFp),
}

impl FpSolver {
    fn run(&self, f: &mut GridDensity, opts: &RunOptions) -> econokin_core::Result<DecaySeries> {
        match self {
            FpSolver::Linear(s) => s.run(f, opts),
            FpSolver::Nonlinear(s) => s.run(f, opts),
            FpSolver::Transformed(s) => s.run(f, opts),
        }
    }

    fn rho(&self) -> Option<f64> {
        match self {
            FpSolver::Linear(s) => s.rho(),
            FpSolver::Nonlinear(_) => None,
            FpSolver::Transformed(s) => s.rho(),
        }
    }
}

fn fp_run(ctx: &RunContext, manifest: &mut RunManifest) -> CliResult<()> {
    let p = &ctx.params;
    let fp_cfg = ctx.config.fp.ok_or_else(|| {
        CliError::Config("an `fp` section is required for Fokker-Planck modes".to_string())
    })?;
    let initial_cfg = ctx.config.initial.ok_or_else(|| {
        CliError::Config("an `initial` section is required for Fokker-Planck modes".to_string())
    })?;
    if fp_cfg.time == TimeScale::Kinetic && ctx.config.mode != Mode::FpLinear {
        return Err(CliError::Config(format!(
            "`time: kinetic` only applies to fp-linear; `{}` runs in its native clock",
            ctx.config.mode.name()
        )));
    }

    let x_target = equilibrium_x(p)?;
    let x_grid = grid_config(ctx).build(&x_target, p.m())?;
    let (solver, f0) = match ctx.config.mode {
        Mode::FpLinear => {
            let solver = match fp_cfg.time {
                TimeScale::Normalized => LinearFp::normalized(p, &x_grid)?,
                TimeScale::Kinetic => LinearFp::kinetic(p, &x_grid)?,
            };
            let f0 = initial_density_x(&initial_cfg, &x_grid, p)?;
            validate_initial(&f0, p)?;
            (FpSolver::Linear(solver), f0)
        }
        Mode::FpNonlinear => {
            let solver = NonlinearFp::new(p, &x_grid)?;
            let f0 = initial_density_x(&initial_cfg, &x_grid, p)?;
            validate_initial(&f0, p)?;
            (FpSolver::Nonlinear(solver), f0)
        }
        Mode::FpTransformed => {
            let y_grid = Arc::new(x_grid.transformed(p.delta())?);
            let solver = TransformedFp::new(p, &y_grid)?;
            // The hypotheses checked by the initial-condition validator are
            // statements about wealth-coordinate moments; the transformed
            // mode only enforces that the input is a unit-mass density.
            let f0 = initial_density_y(&initial_cfg, &y_grid, p)?;
            (FpSolver::Transformed(solver), f0)
        }
        _ => unreachable!("fp_run dispatches Fokker-Planck modes only"),
    };

    let header = base_header(ctx);
    io::write_density_csv(&ctx.out.join("density_initial.csv"), &header, &f0)?;
    manifest.push_file("density_initial.csv");

    let mut f = f0;
    let opts = RunOptions {
        dt: fp_cfg.dt,
        t_end: fp_cfg.t_end,
        snapshot_every: fp_cfg.snapshot_every,
    };
    let series = solver.run(&mut f, &opts)?;

    io::write_decay_csv(&ctx.out.join("decay.csv"), &header, &series)?;
    manifest.push_file("decay.csv");
    io::write_density_csv(&ctx.out.join("density_final.csv"), &header, &f)?;
    manifest.push_file("density_final.csv");

    let report = match &solver {
        FpSolver::Linear(s) => entropy_report_vs_analytic(&f, s.target(), p.delta(), s.rho())?,
        FpSolver::Nonlinear(s) => {
            let target = s.self_consistent_target(f.mean())?;
            entropy_report_vs_analytic(&f, &target, p.delta(), None)?
        }
        FpSolver::Transformed(s) => entropy_report_transformed(&f, s.target(), s.rho())?,
    };
    io::write_json(&ctx.out.join("entropy.json"), &report)?;
    manifest.push_file("entropy.json");

    manifest.rho_delta = solver.rho();
    summarize_decay(manifest, &series, solver.rho())?;
    Ok(())
}

/// Conservation and decay-rate summary entries shared by the FP modes.
fn summarize_decay(
    manifest: &mut RunManifest,
    series: &DecaySeries,
    rho: Option<f64>,
) -> CliResult<()> {
    let first = series.rows.first();
    let last = series.rows.last();
    if let (Some(a), Some(b)) = (first, last) {
        manifest.set("mass_initial", a.mass)?;
        manifest.set("mass_final", b.mass)?;
        manifest.set("mass_drift", (b.mass - a.mass).abs())?;
        manifest.set("mean_initial", a.mean)?;
        manifest.set("mean_final", b.mean)?;
        manifest.set("mean_drift", (b.mean - a.mean).abs())?;
        manifest.set("H_initial", a.entropy)?;
        manifest.set("H_final", b.entropy)?;
    }
    if let Ok(fit) = series.fit_entropy_rate() {
        manifest.set("fitted_H_rate", fit.rate)?;
        manifest.set("fit_r_squared", fit.r_squared)?;
        manifest.set("fit_points", fit.points_used)?;
    }
    if let Some(r) = rho {
        manifest.set("two_rho_delta", 2.0 * r)?;
        if let Some(env) = series.entropy_envelope_ratio(2.0 * r) {
            manifest.set("envelope_ratio", env)?;
        }
    }
    Ok(())
}

fn initial_density_x(
    cfg: &InitialConfig,
    grid: &Arc<Grid>,
    p: &ModelParams,
) -> CliResult<GridDensity> {
    match *cfg {
        InitialConfig::Uniform { lo, hi } => uniform_density(grid, lo, hi, true),
        InitialConfig::PerturbedEquilibrium { m_factor } => {
            check_m_factor(m_factor)?;
            let d = AnalyticDensity::inverse_gamma_delta(p.mu(), p.m() * m_factor, p.delta())?;
            Ok(GridDensity::from_analytic_normalized(grid, &d)?)
        }
        InitialConfig::Analytic { density } => {
            Ok(GridDensity::from_analytic_normalized(grid, &density)?)
        }
        InitialConfig::Constant { .. } => Err(CliError::Config(
            "a `constant` initial condition is for particle modes; grid densities take \
             `uniform`, `perturbed_equilibrium`, or `analytic`"
                .to_string(),
        )),
    }
}

fn initial_density_y(
    cfg: &InitialConfig,
    grid_y: &Arc<Grid>,
    p: &ModelParams,
) -> CliResult<GridDensity> {
    match *cfg {
        InitialConfig::Uniform { lo, hi } => uniform_density(grid_y, lo, hi, false),
        InitialConfig::PerturbedEquilibrium { m_factor } => {
            check_m_factor(m_factor)?;
            let scaled = rebuild_with(p, p.m() * m_factor, p.kappa_kernel())?;
            let d = equilibrium_y(&scaled)?;
            Ok(GridDensity::from_analytic_normalized(grid_y, &d)?)
        }
        InitialConfig::Analytic { density } => {
            Ok(GridDensity::from_analytic_normalized(grid_y, &density)?)
        }
        InitialConfig::Constant { .. } => Err(CliError::Config(
            "a `constant` initial condition is for particle modes; grid densities take \
             `uniform`, `perturbed_equilibrium`, or `analytic`"
                .to_string(),
        )),
    }
}

fn check_m_factor(m_factor: f64) -> CliResult<()> {
    if !(m_factor > 0.0 && m_factor.is_finite()) {
        return Err(CliError::Config(format!(
            "perturbed_equilibrium needs m_factor > 0, got {m_factor}"
        )));
    }
    Ok(())
}

/// Same model with a different mean parameter or kernel constant.
fn rebuild_with(p: &ModelParams, m: f64, kappa_kernel: f64) -> CliResult<ModelParams> {
    let built = if p.delta() == 0.0 {
        ModelParams::reference_delta0(p.lambda(), p.sigma(), m, kappa_kernel)
    } else {
        ModelParams::new(p.lambda(), p.sigma(), m, p.delta(), kappa_kernel)
    };
    Ok(built?)
}

// ---------------------------------------------------------------------------
// Monte Carlo modes
// ---------------------------------------------------------------------------

struct ReplicaOutcome {
    moments: Vec<MomentRow>,
    decay: Option<DecaySeries>,
    m1_initial: f64,
    total_initial: f64,
    total_final: f64,
    histogram: Option<GridDensity>,
}

fn mc_run(ctx: &RunContext, manifest: &mut RunManifest) -> CliResult<()> {
    let p = &ctx.params;
    let mode = ctx.config.mode;
    let rule = ctx.config.rule.ok_or_else(|| {
        CliError::Config("a `rule` section is required for particle modes".to_string())
    })?;
    let fits = matches!(
        (mode, &rule),
        (Mode::McLinear, InteractionRule::LinearMarket { .. })
            | (Mode::McGambling, InteractionRule::GamblingConservative { .. })
            | (
                Mode::McGambling,
                InteractionRule::GamblingMeanConservative { .. }
            )
            | (Mode::McBinary, InteractionRule::BinaryCpt { .. })
    );
    if !fits {
        return Err(CliError::Config(format!(
            "rule `{}` does not fit mode `{}`",
            rule.name(),
            mode.name()
        )));
    }
    rule.validate_for(p).map_err(|e| CliError::Config(e.to_string()))?;
    if matches!(mode, Mode::McLinear | Mode::McBinary) {
        check_second_moment_constraint(p)?;
    }
    let mc_cfg = ctx.config.mc.ok_or_else(|| {
        CliError::Config("an `mc` section is required for particle modes".to_string())
    })?;
    let initial = ctx.config.initial.ok_or_else(|| {
        CliError::Config("an `initial` section is required for particle modes".to_string())
    })?;
    match initial {
        InitialConfig::Uniform { lo, hi } => {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(CliError::Config(format!(
                    "uniform initial wealths need 0 <= lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        InitialConfig::Constant { value } => {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::Config(format!(
                    "constant initial wealth must be positive, got {value}"
                )));
            }
        }
        _ => {
            return Err(CliError::Config(
                "particle modes take `uniform` or `constant` initial conditions".to_string(),
            ))
        }
    }

    // Histogram grid, with the mode's equilibrium as the auto-domain (and,
    // for the gambling rules, observer) reference.
    let grid_info: Option<(Arc<Grid>, AnalyticDensity)> = match &ctx.config.grid {
        None => None,
        Some(gc) => {
            let (reference, m_ref) = match &rule {
                InteractionRule::GamblingConservative { .. } => {
                    (AnalyticDensity::gamma_gambling(p.delta())?, 1.0)
                }
                InteractionRule::GamblingMeanConservative { a } => {
                    (AnalyticDensity::inverse_gamma_gambling(*a, p.delta())?, 1.0)
                }
                _ => (equilibrium_x(p)?, p.m()),
            };
            Some((gc.build(&reference, m_ref)?, reference))
        }
    };
    let observer = match (&grid_info, mode) {
        (Some((grid, reference)), Mode::McGambling) => Some(McObserver {
            grid: Arc::clone(grid),
            reference: *reference,
            delta: p.delta(),
            rho: None,
        }),
        _ => None,
    };

    manifest.derive_replica_seeds(ctx.replicas);
    let opts = mc_cfg.to_options();
    let obs_ref = observer.as_ref();
    let hist_grid = grid_info.as_ref().map(|(g, _)| g);
    let outcomes: Vec<ReplicaOutcome> = run_replicas(ctx.seed, ctx.replicas, |_, seed_r| {
        let mut ens = make_ensemble(&initial, mc_cfg.n_particles, seed_r)?;
        let m1_initial = ens.mean();
        let total_initial = ens.total_wealth();
        let series = econokin_core::mc::run(&mut ens, &rule, p, &opts, obs_ref)?;
        let histogram = hist_grid.map(|g| ens.histogram_on(g).0);
        Ok(ReplicaOutcome {
            moments: series.moments,
            decay: series.decay,
            m1_initial,
            total_initial,
            total_final: ens.total_wealth(),
            histogram,
        })
    })?;

    let header = base_header(ctx)
        .with("rule", rule.name())
        .with("replicas", ctx.replicas);
    for (i, o) in outcomes.iter().enumerate() {
        let h = header
            .clone()
            .with("replica", i)
            .with("replica_seed", manifest.replica_seeds[i]);
        let name = format!("moments_r{i}.csv");
        io::write_moments_csv(&ctx.out.join(&name), &h, &o.moments)?;
        manifest.push_file(&name);
        if let Some(d) = &o.decay {
            let name = format!("decay_r{i}.csv");
            io::write_decay_csv(&ctx.out.join(&name), &h, d)?;
            manifest.push_file(&name);
        }
    }
    if let Some((grid, _)) = &grid_info {
        let avg = average_histograms(
            grid,
            outcomes.iter().map(|o| o.histogram.as_ref().expect("grid set")),
        );
        io::write_density_csv(&ctx.out.join("density_final.csv"), &header, &avg)?;
        manifest.push_file("density_final.csv");
    }

    summarize_mc(manifest, ctx, &rule, &outcomes)?;
    Ok(())
}

fn make_ensemble(
    initial: &InitialConfig,
    n: usize,
    seed: u64,
) -> econokin_core::Result<ParticleEnsemble> {
    match *initial {
        InitialConfig::Uniform { lo, hi } => ParticleEnsemble::sample_uniform(n, lo, hi, seed),
        InitialConfig::Constant { value } => ParticleEnsemble::constant(n, value, seed),
        _ => Err(CoreError::InvalidParam(
            "particle modes take `uniform` or `constant` initial conditions".to_string(),
        )),
    }
}

/// Element-wise mean of raw histograms sharing one grid; keeps the time
/// stamp of the inputs.
fn average_histograms<'a>(
    grid: &Arc<Grid>,
    histograms: impl Iterator<Item = &'a GridDensity>,
) -> GridDensity {
    let mut avg = GridDensity::from_fn(grid, |_| 0.0);
    let mut count = 0usize;
    for h in histograms {
        for (a, v) in avg.values.iter_mut().zip(&h.values) {
            *a += v;
        }
        avg.time = h.time;
        count += 1;
    }
    if count > 0 {
        for a in avg.values.iter_mut() {
            *a /= count as f64;
        }
    }
    avg
}

fn summarize_mc(
    manifest: &mut RunManifest,
    ctx: &RunContext,
    rule: &InteractionRule,
    outcomes: &[ReplicaOutcome],
) -> CliResult<()> {
    let p = &ctx.params;
    manifest.set("rule", rule.name())?;
    let last_rows: Vec<&MomentRow> = outcomes
        .iter()
        .map(|o| o.moments.last().expect("initial snapshot always recorded"))
        .collect();
    let (m1_final, m1_se) = if outcomes.len() > 1 {
        let values: Vec<f64> = last_rows.iter().map(|r| r.m1).collect();
        replica_scatter(&values)
    } else {
        (last_rows[0].m1, last_rows[0].se1)
    };
    let (m2_final, m2_se) = if outcomes.len() > 1 {
        let values: Vec<f64> = last_rows.iter().map(|r| r.m2).collect();
        replica_scatter(&values)
    } else {
        (last_rows[0].m2, last_rows[0].se2)
    };
    manifest.set("final_m1", m1_final)?;
    manifest.set("final_m1_se", m1_se)?;
    manifest.set("final_m2", m2_final)?;
    manifest.set("final_m2_se", m2_se)?;
    let m1_initial_max = outcomes.iter().map(|o| o.m1_initial).fold(0.0, f64::max);
    manifest.set("m1_initial_max", m1_initial_max)?;

    if matches!(rule, InteractionRule::GamblingConservative { .. }) {
        let drift = outcomes
            .iter()
            .map(|o| ((o.total_final - o.total_initial) / o.total_initial).abs())
            .fold(0.0, f64::max);
        manifest.set("total_wealth_rel_drift_max", drift)?;
    }
    if let InteractionRule::LinearMarket { market, .. } = rule {
        // Long-run mean bound of the linear model: the mean never exceeds
        // max(m1(0), M_{1+delta}/M_delta).
        let m_eff = market.effective_m(p.delta())?;
        let bound = m1_initial_max.max(m_eff);
        let worst = outcomes
            .iter()
            .flat_map(|o| o.moments.iter())
            .max_by(|a, b| a.m1.partial_cmp(&b.m1).expect("finite moments"))
            .expect("nonempty moment series");
        manifest.set("effective_market_mean", m_eff)?;
        manifest.set("mean_bound", bound)?;
        manifest.set("m1_max_observed", worst.m1)?;
        manifest.set("m1_max_se", worst.se1)?;
        manifest.set(
            "mean_bound_satisfied",
            worst.m1 <= bound + 3.0 * worst.se1,
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// grazing-study
// ---------------------------------------------------------------------------

struct GrazeOutcome {
    histogram: GridDensity,
    remainder: Option<f64>,
    m1_initial: f64,
    m1_final: f64,
}

fn grazing_study(ctx: &RunContext, manifest: &mut RunManifest) -> CliResult<()> {
    let p = &ctx.params;
    let g = ctx
        .config
        .grazing
        .clone()
        .ok_or_else(|| CliError::Config("a `grazing` section is required".to_string()))?;
    let rule = ctx.config.rule.ok_or_else(|| {
        CliError::Config("a `rule` section (linear-market) is required".to_string())
    })?;
    let market = match &rule {
        InteractionRule::LinearMarket { market, .. } => *market,
        _ => {
            return Err(CliError::Config(format!(
                "grazing-study requires the linear-market rule, got `{}`",
                rule.name()
            )))
        }
    };
    rule.validate_for(p).map_err(|e| CliError::Config(e.to_string()))?;
    check_second_moment_constraint(p)?;
    if g.eps_values.is_empty() {
        return Err(CliError::Config(
            "eps_values must contain at least one entry".to_string(),
        ));
    }
    for &eps in &g.eps_values {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(CliError::Config(format!(
                "grazing parameter eps must lie in (0, 1/2], got {eps}"
            )));
        }
    }
    if g.eps_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(
            "eps_values must be strictly decreasing".to_string(),
        ));
    }
    // The limiting equation drifts toward the market's effective mean
    // M_{1+delta}/M_delta; the configured m must match it or the comparison
    // would measure a parameter mismatch instead of the grazing error.
    let m_eff = market.effective_m(p.delta())?;
    if (m_eff - p.m()).abs() > 1e-6 * p.m() {
        return Err(CliError::Config(format!(
            "market effective mean M_(1+delta)/M_delta = {m_eff} must equal params.m = {} \
             for the limiting comparison",
            p.m()
        )));
    }

    let eq = equilibrium_x(p)?;
    let grid = grid_config(ctx).build(&eq, p.m())?;

    // The macroscopic clock of the rescaled kinetic runs carries the
    // prefactor kappa sigma M_delta / 2 with the *market's* delta-moment;
    // the kinetic-time solver uses the equilibrium's own delta-moment, so
    // the kernel constant is rescaled by the ratio to make the two clocks
    // coincide exactly.
    let m_delta_market = market.moment(p.delta())?;
    let m_delta_eq = eq
        .moment(p.delta())?
        .finite()
        .ok_or_else(|| CliError::Config("equilibrium delta-moment diverges".to_string()))?;
    let p_fp = rebuild_with(p, p.m(), p.kappa_kernel() * m_delta_market / m_delta_eq)?;
    let solver = LinearFp::kinetic(&p_fp, &grid)?;

    let (lo, hi) = match ctx.config.initial {
        Some(InitialConfig::Uniform { lo, hi }) => (lo, hi),
        _ => {
            return Err(CliError::Config(
                "grazing-study requires a `uniform` initial condition shared by the particle \
                 ensembles and the density"
                    .to_string(),
            ))
        }
    };
    let mut f_fp = uniform_density(&grid, lo, hi, true)?;
    validate_initial(&f_fp, p)?;
    let fp_opts = RunOptions {
        dt: g.fp_dt,
        t_end: g.t_end,
        snapshot_every: usize::MAX,
    };
    let fp_series = solver.run(&mut f_fp, &fp_opts)?;

    let header = base_header(ctx).with("rule", rule.name());
    io::write_density_csv(&ctx.out.join("fp_final.csv"), &header, &f_fp)?;
    manifest.push_file("fp_final.csv");
    io::write_decay_csv(&ctx.out.join("fp_decay.csv"), &header, &fp_series)?;
    manifest.push_file("fp_decay.csv");

    let n_eps = g.eps_values.len();
    let total = n_eps
        .checked_mul(ctx.replicas)
        .ok_or_else(|| CliError::Config("eps_values x replicas overflows".to_string()))?;
    manifest.replica_seeds = (0..total)
        .map(|i| substream_seed(ctx.seed, i as u64))
        .collect();
    let opts = McOptions {
        dt: g.dt,
        t_end: g.t_end,
        snapshot_every: usize::MAX,
        schedule: g.schedule,
    };
    let replicas = ctx.replicas;
    let outcomes: Vec<GrazeOutcome> = run_replicas(ctx.seed, total, |idx, seed_r| {
        let eps = g.eps_values[idx / replicas];
        let mut ens = ParticleEnsemble::sample_uniform(g.n_particles, lo, hi, seed_r)?;
        let m1_initial = ens.mean();
        let series = econokin_core::mc::run_grazing(&mut ens, &rule, p, eps, &opts, None)?;
        Ok(GrazeOutcome {
            histogram: ens.histogram_on(&grid).0,
            remainder: series.grazing_remainder,
            m1_initial,
            m1_final: ens.mean(),
        })
    })?;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_eps);
    let mut drifts: Vec<f64> = Vec::with_capacity(n_eps);
    for (k, &eps) in g.eps_values.iter().enumerate() {
        let group = &outcomes[k * replicas..(k + 1) * replicas];
        let avg = average_histograms(&grid, group.iter().map(|o| &o.histogram));
        let l1 = avg.l1_distance(&f_fp)?;
        let remainder = group
            .iter()
            .filter_map(|o| o.remainder)
            .sum::<f64>()
            / replicas as f64;
        let drift = group
            .iter()
            .map(|o| (o.m1_final - o.m1_initial) / g.t_end)
            .sum::<f64>()
            / replicas as f64;
        let name = format!("density_eps{k}.csv");
        io::write_density_csv(
            &ctx.out.join(&name),
            &header.clone().with("eps", eps),
            &avg,
        )?;
        manifest.push_file(&name);
        rows.push(vec![eps, l1, remainder]);
        drifts.push(drift);
    }
    io::write_table_csv(
        &ctx.out.join("grazing_l1.csv"),
        &header,
        &["eps", "l1", "remainder"],
        &rows,
    )?;
    manifest.push_file("grazing_l1.csv");

    let monotone = rows.windows(2).all(|w| w[1][1] < w[0][1]);
    manifest.rho_delta = solver.rho();
    manifest.set("eps_values", &g.eps_values)?;
    manifest.set("l1_by_eps", &rows)?;
    manifest.set("monotone_decreasing", monotone)?;
    manifest.set("mean_drift_by_eps", &drifts)?;
    if let (Some(a), Some(b)) = (fp_series.rows.first(), fp_series.rows.last()) {
        manifest.set("fp_mass_drift", (b.mass - a.mass).abs())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lsi-audit
// ---------------------------------------------------------------------------

fn lsi_audit_run(ctx: &RunContext, manifest: &mut RunManifest) -> CliResult<()> {
    let trials = ctx.config.lsi.map(|l| l.trials).unwrap_or(100);
    let audit = lsi_audit(&ctx.params, trials, ctx.seed)?;
    io::write_json(&ctx.out.join("lsi.json"), &audit)?;
    manifest.push_file("lsi.json");
    manifest.rho_delta = Some(audit.rho);
    manifest.set("trials", trials)?;
    manifest.set("worst_ratio", audit.worst_ratio)?;
    manifest.set("max_entropy_mismatch", audit.max_entropy_mismatch)?;
    manifest.set("max_fisher_mismatch", audit.max_fisher_mismatch)?;
    manifest.set("bound_satisfied", audit.worst_ratio <= 1.0)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density_is_normalized_on_the_grid() {
        let grid = Arc::new(Grid::uniform(0.0, 4.0, 64).unwrap());
        let f = uniform_density(&grid, 1.0, 3.0, true).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12, "mass = {}", f.mass());
        assert!(uniform_density(&grid, -1.0, 3.0, true).is_err());
        assert!(uniform_density(&grid, 10.0, 20.0, true).is_err());
    }

    #[test]
    fn histogram_average_divides_by_count() {
        let grid = Arc::new(Grid::uniform(0.0, 1.0, 4).unwrap());
        let a = GridDensity::from_fn(&grid, |_| 2.0);
        let b = GridDensity::from_fn(&grid, |_| 4.0);
        let avg = average_histograms(&grid, [&a, &b].into_iter());
        for v in &avg.values {
            assert_eq!(*v, 3.0);
        }
    }
}
