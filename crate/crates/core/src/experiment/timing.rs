use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub filter: String,
    pub median_seconds: f64,
    /// Median relative to the reference filter.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub reference: String,
    pub entries: Vec<TimingEntry>,
}

impl TimingReport {
    pub fn median(&self, filter: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.filter == filter)
            .map(|e| e.median_seconds)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Median wall-clock per filter, normalised to `reference` (the first
/// filter when `reference` is absent from `samples`).
pub fn timing_report(samples: &[(String, Vec<f64>)], reference: &str) -> TimingReport {
    let medians: Vec<(String, f64)> = samples
        .iter()
        .map(|(name, s)| (name.clone(), median(s)))
        .collect();
    let (ref_name, ref_median) = medians
        .iter()
        .find(|(n, _)| n == reference)
        .or(medians.first())
        .cloned()
        .unwrap_or_else(|| (reference.to_string(), f64::NAN));
    TimingReport {
        reference: ref_name,
        entries: medians
            .into_iter()
            .map(|(filter, median_seconds)| TimingEntry {
                relative: median_seconds / ref_median,
                filter,
                median_seconds,
            })
            .collect(),
    }
}
