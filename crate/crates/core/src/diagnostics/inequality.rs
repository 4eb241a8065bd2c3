//! Wealth-inequality summary statistics.

use crate::error::{Error, Result};
use crate::grid::GridDensity;

/// Gini coefficient of a density on a grid, from the trapezoidal Lorenz
/// construction: with cell masses `p_i = f_i h_i` (normalized) and cumulative
/// population/wealth shares `(P_i, L_i)`,
///
/// ```text
/// G = 1 - sum_i (P_i - P_{i-1}) (L_i + L_{i-1}).
/// ```
pub fn gini(f: &GridDensity) -> Result<f64> {
    if let Some(&bad) = f.values.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::NotADensity(format!(
            "gini needs finite nonnegative density values, got {bad}"
        )));
    }
    let mass = f.mass();
    let total_wealth = f.moment(1.0);
    if !(mass > 0.0 && total_wealth > 0.0 && total_wealth.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "gini needs positive mass and mean, got mass {mass}, first moment {total_wealth}"
        )));
    }
    let centers = f.grid.centers();
    let widths = f.grid.widths();
    let mut area = 0.0; // twice the area under the Lorenz curve
    let mut wealth_cum = 0.0;
    for i in 0..f.values.len() {
        let p = f.values[i] * widths[i] / mass;
        let dl = centers[i] * f.values[i] * widths[i] / total_wealth;
        area += p * (2.0 * wealth_cum + dl);
        wealth_cum += dl;
    }
    Ok(1.0 - area)
}

/// Gini coefficient of a sample of nonnegative wealths, from the sorted-sum
/// identity `G = sum_i (2 i - n - 1) x_(i) / (n sum_i x_i)` (1-based ranks).
pub fn gini_samples(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParam(
            "gini needs a nonempty sample".to_string(),
        ));
    }
    if let Some(&bad) = samples.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "gini needs finite nonnegative wealths, got {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParam(
            "gini undefined for zero total wealth".to_string(),
        ));
    }
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok(weighted / (n * total))
}
