//! The `report` subcommand: turns a manifest and its output files into a
//! human-readable summary plus gnuplot-ready two-column data files. Never
//! renders images.

use crate::error::{CliError, CliResult};
use crate::manifest::{self, RunManifest};
use econokin_core::diagnostics::fit_decay_rate;
use econokin_core::io::{self, FileHeader};
use serde_json::Value;
use std::path::{Path, PathBuf};

pub struct ReportInputs {
    pub manifest_path: PathBuf,
    /// Defaults to the manifest's own directory.
    pub out: Option<PathBuf>,
}

pub fn report(inputs: &ReportInputs) -> CliResult<()> {
    let man = manifest::read(&inputs.manifest_path)?;
    let dir = inputs
        .manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let out = inputs.out.clone().unwrap_or_else(|| dir.clone());
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;

    let mut lines = vec![
        format!("mode: {}", man.mode),
        format!("config_hash: {}", man.config_hash),
        format!("code_version: {}", man.code_version),
        format!("base_seed: {}", man.base_seed),
        format!("workers: {}", man.workers),
    ];
    match man.mode.as_str() {
        "fp-linear" | "fp-nonlinear" | "fp-transformed" => {
            fp_section(&man, &dir, &out, &mut lines)?
        }
        "mc-linear" | "mc-gambling" | "mc-binary" => mc_section(&man, &dir, &out, &mut lines)?,
        "grazing-study" => grazing_section(&man, &dir, &out, &mut lines)?,
        "lsi-audit" => lsi_section(&man, &dir, &mut lines)?,
        "steady" => steady_section(&man, &mut lines),
        other => {
            return Err(CliError::Io(format!(
                "manifest declares unknown mode `{other}`"
            )))
        }
    }

    let text = lines.join("\n") + "\n";
    std::fs::write(out.join("summary.txt"), &text)
        .map_err(|e| CliError::Io(format!("writing summary.txt: {e}")))?;
    print!("{text}");
    Ok(())
}

fn plot_header(man: &RunManifest) -> FileHeader {
    FileHeader::new(man.config_hash.clone(), man.base_seed)
        .with("mode", &man.mode)
        .with("source", "report")
}

// ---------------------------------------------------------------------------
// CSV reading
// ---------------------------------------------------------------------------

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str, path: &Path) -> CliResult<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| {
                CliError::Io(format!("{} has no column `{name}`", path.display()))
            })?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        match &columns {
            None => columns = Some(line.split(',').map(str::to_string).collect()),
            Some(cols) => {
                let row: Result<Vec<f64>, _> =
                    line.split(',').map(|c| c.parse::<f64>()).collect();
                let row = row.map_err(|e| {
                    CliError::Io(format!("corrupt row in {}: {e}", path.display()))
                })?;
                if row.len() != cols.len() {
                    return Err(CliError::Io(format!(
                        "row width mismatch in {}",
                        path.display()
                    )));
                }
                rows.push(row);
            }
        }
    }
    let columns =
        columns.ok_or_else(|| CliError::Io(format!("{} has no header row", path.display())))?;
    Ok(Table { columns, rows })
}

fn summary_f64(man: &RunManifest, key: &str) -> Option<f64> {
    man.summary.get(key).and_then(Value::as_f64)
}

fn summary_bool(man: &RunManifest, key: &str) -> Option<bool> {
    man.summary.get(key).and_then(Value::as_bool)
}

fn max_abs_drift(values: &[f64]) -> f64 {
    let first = values.first().copied().unwrap_or(0.0);
    values
        .iter()
        .map(|v| (v - first).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// mode sections
// ---------------------------------------------------------------------------

fn fp_section(
    man: &RunManifest,
    dir: &Path,
    out: &Path,
    lines: &mut Vec<String>,
) -> CliResult<()> {
    let path = dir.join("decay.csv");
    let table = read_table(&path)?;
    let t = table.column("t", &path)?;
    let h = table.column("H", &path)?;
    let mass = table.column("mass", &path)?;
    let mean = table.column("mean", &path)?;
    let l1 = table.column("l1_to_eq", &path)?;

    io::write_gnuplot_xy(&out.join("H_vs_t.dat"), &plot_header(man), &t, &h)?;
    io::write_gnuplot_xy(&out.join("l1_vs_t.dat"), &plot_header(man), &t, &l1)?;

    lines.push(format!("mass_drift: {:e}", max_abs_drift(&mass)));
    lines.push(format!("mean_drift: {:e}", max_abs_drift(&mean)));

    let two_rho = man.rho_delta.map(|r| 2.0 * r);
    match fit_decay_rate(&t, &h) {
        Ok(fit) => {
            lines.push(format!("fitted_H_rate: {}", fit.rate));
            lines.push(format!("fit_r_squared: {}", fit.r_squared));
            match two_rho {
                Some(two) => {
                    lines.push(format!("two_rho_delta: {two}"));
                    // 5% slack on the fitted rate: the discrete fit sees
                    // transients and snapshot quantization the analytic
                    // bound does not.
                    lines.push(format!("bound_satisfied: {}", fit.rate >= 0.95 * two));
                }
                None => {
                    lines.push("two_rho_delta: n/a".to_string());
                    lines.push("bound_satisfied: n/a (no convexity constant for this mode)"
                        .to_string());
                }
            }
        }
        Err(e) => {
            lines.push(format!("fitted_H_rate: unavailable ({e})"));
            match two_rho {
                Some(two) => lines.push(format!("two_rho_delta: {two}")),
                None => lines.push("two_rho_delta: n/a".to_string()),
            }
            lines.push("bound_satisfied: n/a (no fitted rate)".to_string());
        }
    }
    if let Some(env) = summary_f64(man, "envelope_ratio") {
        lines.push(format!("envelope_ratio: {env}"));
    }
    Ok(())
}

fn mc_section(
    man: &RunManifest,
    dir: &Path,
    out: &Path,
    lines: &mut Vec<String>,
) -> CliResult<()> {
    let moment_files: Vec<&String> = man
        .files
        .iter()
        .filter(|f| f.starts_with("moments_r") && f.ends_with(".csv"))
        .collect();
    if moment_files.is_empty() {
        return Err(CliError::Io(
            "manifest lists no moments_r*.csv files".to_string(),
        ));
    }
    lines.push(format!("replicas: {}", moment_files.len()));

    // Replica-averaged mean trajectory for plotting.
    let mut t: Vec<f64> = Vec::new();
    let mut m1_avg: Vec<f64> = Vec::new();
    for (i, name) in moment_files.iter().enumerate() {
        let path = dir.join(name.as_str());
        let table = read_table(&path)?;
        let ti = table.column("t", &path)?;
        let m1 = table.column("m1", &path)?;
        if i == 0 {
            t = ti;
            m1_avg = m1;
        } else {
            if ti.len() != t.len() {
                return Err(CliError::Io(format!(
                    "{} has {} snapshots but replica 0 has {}",
                    path.display(),
                    ti.len(),
                    t.len()
                )));
            }
            for (a, v) in m1_avg.iter_mut().zip(&m1) {
                *a += v;
            }
        }
    }
    let n = moment_files.len() as f64;
    for a in m1_avg.iter_mut() {
        *a /= n;
    }
    io::write_gnuplot_xy(&out.join("m1_vs_t.dat"), &plot_header(man), &t, &m1_avg)?;

    for key in ["final_m1", "final_m1_se", "final_m2", "final_m2_se"] {
        if let Some(v) = summary_f64(man, key) {
            lines.push(format!("{key}: {v}"));
        }
    }
    if let Some(drift) = summary_f64(man, "total_wealth_rel_drift_max") {
        lines.push(format!("total_wealth_rel_drift_max: {drift:e}"));
    }
    if let Some(bound) = summary_f64(man, "mean_bound") {
        lines.push(format!("mean_bound: {bound}"));
        if let Some(v) = summary_f64(man, "m1_max_observed") {
            lines.push(format!("m1_max_observed: {v}"));
        }
        if let Some(v) = summary_f64(man, "m1_max_se") {
            lines.push(format!("m1_max_se: {v}"));
        }
        if let Some(ok) = summary_bool(man, "mean_bound_satisfied") {
            lines.push(format!("mean_bound_satisfied: {ok}"));
        }
    }

    // Entropy trajectory of the first replica, when an observer ran.
    if man.files.iter().any(|f| f == "decay_r0.csv") {
        let path = dir.join("decay_r0.csv");
        let table = read_table(&path)?;
        let t = table.column("t", &path)?;
        let h = table.column("H", &path)?;
        let l1 = table.column("l1_to_eq", &path)?;
        io::write_gnuplot_xy(&out.join("H_vs_t.dat"), &plot_header(man), &t, &h)?;
        io::write_gnuplot_xy(&out.join("l1_vs_t.dat"), &plot_header(man), &t, &l1)?;
        if let Ok(fit) = fit_decay_rate(&t, &l1) {
            lines.push(format!("fitted_l1_rate: {}", fit.rate));
        }
    }
    Ok(())
}

fn grazing_section(
    man: &RunManifest,
    dir: &Path,
    out: &Path,
    lines: &mut Vec<String>,
) -> CliResult<()> {
    let path = dir.join("grazing_l1.csv");
    let table = read_table(&path)?;
    let eps = table.column("eps", &path)?;
    let l1 = table.column("l1", &path)?;
    let remainder = table.column("remainder", &path)?;

    io::write_gnuplot_xy(&out.join("l1_vs_eps.dat"), &plot_header(man), &eps, &l1)?;
    io::write_gnuplot_xy(
        &out.join("remainder_vs_eps.dat"),
        &plot_header(man),
        &eps,
        &remainder,
    )?;

    for i in 0..eps.len() {
        lines.push(format!(
            "eps {}: l1 {}  remainder {:e}",
            eps[i], l1[i], remainder[i]
        ));
    }
    let monotone = l1.windows(2).all(|w| w[1] < w[0]);
    lines.push(format!("l1_monotone_decreasing: {monotone}"));
    if let Some(drift) = summary_f64(man, "fp_mass_drift") {
        lines.push(format!("fp_mass_drift: {drift:e}"));
    }
    Ok(())
}

fn lsi_section(man: &RunManifest, dir: &Path, lines: &mut Vec<String>) -> CliResult<()> {
    let path = dir.join("lsi.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("corrupt {}: {e}", path.display())))?;
    let worst = doc
        .get("worst_ratio")
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::Io(format!("{} lacks worst_ratio", path.display())))?;
    let rho = doc.get("rho").and_then(Value::as_f64);

    if let Some(r) = rho {
        lines.push(format!("rho_delta: {r}"));
    }
    if let Some(trials) = summary_f64(man, "trials") {
        lines.push(format!("trials: {trials}"));
    }
    lines.push(format!("lsi_worst_ratio: {worst}"));
    lines.push(format!("lsi_bound_satisfied: {}", worst <= 1.0));
    for key in ["max_entropy_mismatch", "max_fisher_mismatch"] {
        if let Some(v) = summary_f64(man, key) {
            lines.push(format!("{key}: {v:e}"));
        }
    }
    Ok(())
}

fn steady_section(man: &RunManifest, lines: &mut Vec<String>) {
    match man.rho_delta {
        Some(r) => lines.push(format!("rho_delta: {r}")),
        None => lines.push("rho_delta: n/a (Maxwellian reference)".to_string()),
    }
    if let Some(mu) = summary_f64(man, "mu") {
        lines.push(format!("mu: {mu}"));
    }
    if let Some(v) = summary_f64(man, "x_mass_outside_grid") {
        lines.push(format!("x_mass_outside_grid: {v:e}"));
    }
    let tabulated: Vec<&str> = man
        .files
        .iter()
        .filter(|f| f.starts_with("steady_"))
        .map(String::as_str)
        .collect();
    lines.push(format!("tabulated: {}", tabulated.join(" ")));
}
