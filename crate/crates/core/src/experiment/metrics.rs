//! Error statistics aggregated over Monte Carlo runs.

use serde::Serialize;

/// Combined error over three components at one step:
/// `sqrt((MSE_1 + MSE_2 + MSE_3) / 3)` where `MSE_i` averages the squared
/// error of component `i` over the rows (runs).
pub fn compute_err(errors: &[[f64; 3]]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let m = errors.len() as f64;
    let total: f64 = errors
        .iter()
        .flat_map(|row| row.iter())
        .map(|e| e * e)
        .sum();
    (total / m / 3.0).sqrt()
}

/// Root mean square of a planar error: `sqrt(mean(ex^2 + ey^2))` over runs.
pub fn compute_rmse(errors: &[[f64; 2]]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    let m = errors.len() as f64;
    let total: f64 = errors.iter().map(|[a, b]| a * a + b * b).sum();
    (total / m).sqrt()
}

/// Mean of the last `window` entries (or of all of them if shorter).
pub fn steady_state_mean(series: &[f64], window: usize) -> f64 {
    let tail = &series[series.len().saturating_sub(window)..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Per-step metric values for every filter of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    /// Metric names, e.g. `err_freq`; each is written to `<name>.csv`.
    pub metrics: Vec<String>,
    pub filters: Vec<String>,
    /// `values[metric][filter][step]`.
    pub values: Vec<Vec<Vec<f64>>>,
}

impl MetricSeries {
    pub fn steps(&self) -> usize {
        self.values
            .first()
            .and_then(|m| m.first())
            .map_or(0, Vec::len)
    }

    pub fn series(&self, metric: &str, filter: &str) -> Option<&[f64]> {
        let m = self.metrics.iter().position(|x| x == metric)?;
        let f = self.filters.iter().position(|x| x == filter)?;
        Some(&self.values[m][f])
    }

    /// CSV text with a `step` column followed by one column per filter.
    /// Values use the shortest representation that round-trips.
    pub fn to_csv(&self, metric: usize) -> String {
        let mut out = String::from("step");
        for f in &self.filters {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for k in 0..self.steps() {
            out.push_str(&(k + 1).to_string());
            for series in &self.values[metric] {
                out.push(',');
                out.push_str(&format!("{:e}", series[k]));
            }
            out.push('\n');
        }
        out
    }
}
