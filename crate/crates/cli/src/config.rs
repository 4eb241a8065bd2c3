//! Experiment configuration: one JSON document per run.
//!
//! The schema is strict (`deny_unknown_fields` everywhere) so typos fail fast
//! with exit code 2 instead of silently running defaults. Sections are
//! optional at the schema level; each mode checks at startup that the
//! sections it needs are present and consistent.

use crate::error::{CliError, CliResult};
use econokin_core::analytic::AnalyticDensity;
use econokin_core::grid::Grid;
use econokin_core::mc::{InteractionRule, McOptions, SweepSchedule};
use econokin_core::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::sync::Arc;

/// Experiment mode; the config's `mode` must match the CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    McLinear,
    McGambling,
    McBinary,
    FpLinear,
    FpNonlinear,
    FpTransformed,
    GrazingStudy,
    LsiAudit,
    Steady,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::McLinear => "mc-linear",
            Mode::McGambling => "mc-gambling",
            Mode::McBinary => "mc-binary",
            Mode::FpLinear => "fp-linear",
            Mode::FpNonlinear => "fp-nonlinear",
            Mode::FpTransformed => "fp-transformed",
            Mode::GrazingStudy => "grazing-study",
            Mode::LsiAudit => "lsi-audit",
            Mode::Steady => "steady",
        }
    }

    /// Modes that draw random numbers and support replication.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Mode::McLinear | Mode::McGambling | Mode::McBinary | Mode::GrazingStudy
        )
    }
}

/// Model constants. `mu = 2 lambda / sigma` is derived, never configured.
/// `kappa_kernel` defaults to 1 and only matters for kinetic-time runs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub m: f64,
    pub delta: f64,
    #[serde(default = "default_kappa")]
    pub kappa_kernel: f64,
}

fn default_kappa() -> f64 {
    1.0
}

impl ParamsConfig {
    pub fn build(&self) -> CliResult<ModelParams> {
        let built = if self.delta == 0.0 {
            ModelParams::reference_delta0(self.lambda, self.sigma, self.m, self.kappa_kernel)
        } else {
            ModelParams::new(self.lambda, self.sigma, self.m, self.delta, self.kappa_kernel)
        };
        built.map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Wealth-grid specification. `auto` centers a log-spaced grid on the mode's
/// reference density and widens it until the tails it cuts are negligible.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Log { lo: f64, hi: f64, cells: usize },
    Uniform { lo: f64, hi: f64, cells: usize },
    Auto { cells: usize },
}

impl GridConfig {
    pub fn build(&self, reference: &AnalyticDensity, m: f64) -> CliResult<Arc<Grid>> {
        let grid = match *self {
            GridConfig::Log { lo, hi, cells } => Grid::log_spaced(lo, hi, cells)?,
            GridConfig::Uniform { lo, hi, cells } => Grid::uniform(lo, hi, cells)?,
            GridConfig::Auto { cells } => {
                let (lo, hi) = Grid::auto_domain(reference, m)?;
                Grid::log_spaced(lo, hi, cells)?
            }
        };
        Ok(Arc::new(grid))
    }
}

/// Monte Carlo sweep-loop settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_particles: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: usize,
    #[serde(default = "default_schedule")]
    pub schedule: SweepSchedule,
}

fn default_snapshot() -> usize {
    1
}

fn default_schedule() -> SweepSchedule {
    SweepSchedule::Fixed
}

impl McConfig {
    pub fn to_options(&self) -> McOptions {
        McOptions {
            dt: self.dt,
            t_end: self.t_end,
            snapshot_every: self.snapshot_every,
            schedule: self.schedule,
        }
    }
}

/// Time unit of a Fokker-Planck run: `normalized` absorbs the kinetic
/// prefactor into the clock; `kinetic` keeps the model's kernel constant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScale {
    #[default]
    Normalized,
    Kinetic,
}

/// Fokker-Planck stepping settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub time: TimeScale,
}

/// Initial condition. `uniform` and `constant` describe particle ensembles;
/// `uniform`, `perturbed_equilibrium`, and `analytic` describe grid
/// densities. Modes reject the variants that do not apply to them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// MC: i.i.d. uniform wealths on `[lo, hi)`. FP: the uniform density on
    /// `[lo, hi)` restricted to the grid and renormalized.
    Uniform { lo: f64, hi: f64 },
    /// MC only: every agent starts with the same wealth.
    Constant { value: f64 },
    /// FP only: the mode's equilibrium with its mean parameter scaled by
    /// `m_factor`.
    PerturbedEquilibrium { m_factor: f64 },
    /// FP only: an explicit analytic density sampled on the grid and
    /// renormalized. Interpreted in the solver's own coordinate.
    Analytic { density: AnalyticDensity },
}

/// Grazing-study settings: one Fokker-Planck oracle run plus, per `eps`, a
/// set of rescaled kinetic runs compared to it at macroscopic time `t_end`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrazingConfig {
    /// Scaling parameters, each in (0, 1/2], listed in strictly decreasing
    /// order so the emitted L1 table reads top-to-bottom toward the limit.
    pub eps_values: Vec<f64>,
    pub n_particles: usize,
    /// Kinetic step of the MC sweeps (the macroscopic clock advances by
    /// `eps * dt` per sweep).
    pub dt: f64,
    /// Macroscopic horizon shared by the MC runs and the FP oracle.
    pub t_end: f64,
    /// Step of the FP oracle, in macroscopic time.
    pub fp_dt: f64,
    #[serde(default = "default_schedule")]
    pub schedule: SweepSchedule,
}

/// Log-Sobolev audit settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsiConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    100
}

/// One experiment: a mode plus the sections it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub params: ParamsConfig,
    #[serde(default)]
    pub rule: Option<InteractionRule>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub fp: Option<FpConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub grazing: Option<GrazingConfig>,
    #[serde(default)]
    pub lsi: Option<LsiConfig>,
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
}

fn default_replicas() -> usize {
    1
}

/// A parsed configuration together with the SHA-256 of the raw file bytes,
/// which stamps every output file.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
}

pub fn load(path: &Path) -> CliResult<LoadedConfig> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let hash = format!("{:x}", hasher.finalize());
    Ok(LoadedConfig { config, hash })
}

/// The second-moment bound of the linear model exists only when
/// `sigma + lambda^2 < 2 lambda`; linear-rule modes require it up front so
/// their moment diagnostics are meaningful.
pub fn check_second_moment_constraint(p: &ModelParams) -> CliResult<()> {
    let gap = 2.0 * p.lambda() - p.sigma() - p.lambda() * p.lambda();
    if gap <= 0.0 {
        return Err(CliError::Config(format!(
            "second-moment constraint violated: need sigma + lambda^2 < 2 lambda, \
             got sigma = {}, lambda = {} (gap {gap})",
            p.sigma(),
            p.lambda()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(mode: &str) -> String {
        format!(
            r#"{{
                "mode": "{mode}",
                "params": {{"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 1.0}},
                "seed": 7
            }}"#
        )
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal("steady")).unwrap();
        assert_eq!(cfg.mode, Mode::Steady);
        assert_eq!(cfg.replicas, 1);
        assert_eq!(cfg.params.kappa_kernel, 1.0);
        assert!(cfg.rule.is_none());
        let p = cfg.params.build().unwrap();
        assert_eq!(p.mu(), 2.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal("steady").replace("\"seed\": 7", "\"seed\": 7, \"sedd\": 1");
        let err = serde_json::from_str::<ExperimentConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("sedd"), "{err}");
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [
            Mode::McLinear,
            Mode::McGambling,
            Mode::McBinary,
            Mode::FpLinear,
            Mode::FpNonlinear,
            Mode::FpTransformed,
            Mode::GrazingStudy,
            Mode::LsiAudit,
            Mode::Steady,
        ] {
            let json = serde_json::to_string(&mode).unwrap();
            assert_eq!(json, format!("\"{}\"", mode.name()));
            let back: Mode = serde_json::from_str(&json).unwrap();
            assert_eq!(back, mode);
        }
    }

    #[test]
    fn delta_zero_routes_to_the_reference_constructor() {
        let cfg = ParamsConfig {
            lambda: 0.3,
            sigma: 0.3,
            m: 1.0,
            delta: 0.0,
            kappa_kernel: 1.0,
        };
        let p = cfg.build().unwrap();
        assert_eq!(p.delta(), 0.0);

        let bad = ParamsConfig {
            delta: 1.5,
            ..cfg
        };
        assert!(matches!(bad.build(), Err(CliError::Config(_))));
    }

    #[test]
    fn second_moment_constraint_detects_violation() {
        // sigma + lambda^2 = 0.99 + 0.25 > 2 lambda = 1.0.
        let p = ModelParams::new(0.5, 0.99, 1.0, 1.0, 1.0).unwrap();
        assert!(check_second_moment_constraint(&p).is_err());
        let ok = ModelParams::new(0.3, 0.04, 1.0, 0.5, 1.0).unwrap();
        assert!(check_second_moment_constraint(&ok).is_ok());
    }
}
