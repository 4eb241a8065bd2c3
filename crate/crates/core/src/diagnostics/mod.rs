//! Convergence and inequality diagnostics shared by the solvers and samplers.
//!
//! Everything here consumes grid densities (or raw samples) and produces
//! scalar functionals: relative entropy and weighted Fisher information with
//! their log-Sobolev ratio, Csiszar-Kullback gaps, fitted exponential decay
//! rates, the quadrature-based log-Sobolev audit on analytic perturbations,
//! and the Gini coefficient.

mod decay;
mod entropy;
mod inequality;
mod lsi;

pub use decay::{fit_decay_rate, DecayColumn, DecayRow, DecaySeries, RateFit};
pub use entropy::{
    entropy_report, entropy_report_transformed, entropy_report_vs_analytic, fisher_weighted,
    relative_entropy_analytic, relative_entropy_grid, EntropyReport, ABS_CONTINUITY_TOL,
    ENTROPY_FLOOR,
};
pub use inequality::{gini, gini_samples};
pub use lsi::{audit_perturbation, lsi_audit, LsiAudit, PerturbationResult, PerturbationSpec};
