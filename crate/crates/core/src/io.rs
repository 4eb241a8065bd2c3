//! Output writers. Every file starts with `#`-prefixed header lines carrying
//! at least the configuration hash and base seed, so a result can always be
//! traced back to the exact inputs that produced it. Floats are written with
//! 17 significant digits, enough to round-trip `f64` exactly.

use crate::diagnostics::DecaySeries;
use crate::error::Result;
use crate::grid::GridDensity;
use crate::mc::MomentRow;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Provenance lines prepended to every output file.
#[derive(Debug, Clone)]
pub struct FileHeader {
    pub config_hash: String,
    pub seed: u64,
    extra: Vec<(String, String)>,
}

impl FileHeader {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
            extra: Vec::new(),
        }
    }

    /// Adds an extra `# key: value` line.
    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash: {}", self.config_hash);
        let _ = writeln!(s, "# seed: {}", self.seed);
        for (k, v) in &self.extra {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

/// 17 significant digits: the shortest width that round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Density profile as `w,f` rows over the grid cell centers.
pub fn write_density_csv(path: &Path, header: &FileHeader, d: &GridDensity) -> Result<()> {
    let centers = d.grid.centers();
    let mut s = header.render();
    let _ = writeln!(s, "# t: {}", fmt_f64(d.time));
    s.push_str("w,f\n");
    for (w, f) in centers.iter().zip(&d.values) {
        let _ = writeln!(s, "{},{}", fmt_f64(*w), fmt_f64(*f));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Decay diagnostics with the columns `t,mass,mean,m2,H,I_delta,l1_to_eq`.
pub fn write_decay_csv(path: &Path, header: &FileHeader, series: &DecaySeries) -> Result<()> {
    let mut s = header.render();
    s.push_str("t,mass,mean,m2,H,I_delta,l1_to_eq\n");
    for r in &series.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.mean),
            fmt_f64(r.m2),
            fmt_f64(r.entropy),
            fmt_f64(r.fisher),
            fmt_f64(r.l1)
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// Sample moments with standard errors: `t,m1,se1,m2,se2`.
pub fn write_moments_csv(path: &Path, header: &FileHeader, rows: &[MomentRow]) -> Result<()> {
    let mut s = header.render();
    s.push_str("t,m1,se1,m2,se2\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.m1),
            fmt_f64(r.se1),
            fmt_f64(r.m2),
            fmt_f64(r.se2)
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// General numeric table with named columns, one row per entry. Errors if a
/// row's length differs from the column count.
pub fn write_table_csv(
    path: &Path,
    header: &FileHeader,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut s = header.render();
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(crate::error::Error::InvalidParam(format!(
                "table row has {} entries but {} columns were declared",
                row.len(),
                columns.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Two-column `x y` series consumable by gnuplot's default `plot` command.
pub fn write_gnuplot_xy(path: &Path, header: &FileHeader, xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut s = header.render();
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(s, "{} {}", fmt_f64(*x), fmt_f64(*y));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Pretty-printed JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
