//! Error classes of the harness, each mapped to a distinct exit code:
//! 2 for configuration errors, 3 for numerical-invariant violations, and 4
//! for I/O failures. Success exits with 0.

use econokin_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (schema errors, out-of-domain
    /// parameters, sections missing for the selected mode).
    Config(String),
    /// A numerical invariant was violated while executing a validated
    /// configuration (acceptance-bound overflow, mass drift, negative cells,
    /// non-convergence).
    Numerical(String),
    /// Filesystem failure reading inputs or writing outputs.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidParam(_)
            | CoreError::NotADensity(_)
            | CoreError::GridCoverage { .. }
            | CoreError::DivergentMoment { .. }
            | CoreError::Json(_) => CliError::Config(e.to_string()),
            CoreError::Io(_) => CliError::Io(e.to_string()),
            CoreError::QuadratureNonConvergence { .. }
            | CoreError::AcceptanceOverflow { .. }
            | CoreError::NegativeCell { .. }
            | CoreError::MassDrift { .. }
            | CoreError::DegenerateMoment { .. }
            | CoreError::AbsoluteContinuity { .. }
            | CoreError::SteadyStateNonConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}
