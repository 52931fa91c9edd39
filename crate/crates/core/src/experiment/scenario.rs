//! Built-in benchmark scenarios, shipped as JSON under `scenarios/`.

use serde::{Deserialize, Serialize};

use crate::adaptive::AdaptConfig;
use crate::error::{Error, Result};
use crate::models::{CtParams, SinusoidParams};

/// ASGHF settings for the process and measurement grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePair {
    pub process: AdaptConfig,
    pub measurement: AdaptConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidScenario {
    #[serde(rename = "_provenance")]
    pub provenance: String,
    pub id: u8,
    pub steps: usize,
    pub model: SinusoidParams,
    pub asghf: AdaptivePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingScenario {
    #[serde(rename = "_provenance")]
    pub provenance: String,
    pub id: u8,
    pub steps: usize,
    pub turn_rates_deg: Vec<f64>,
    /// Turn rate in `initial_truth` is a placeholder; it is set per run.
    pub model: CtParams,
    pub asghf: AdaptivePair,
}

const SINUSOIDS: [&str; 2] = [
    include_str!("../../scenarios/sinusoids_s1.json"),
    include_str!("../../scenarios/sinusoids_s2.json"),
];

const TRACKING: [&str; 2] = [
    include_str!("../../scenarios/tracking_s1.json"),
    include_str!("../../scenarios/tracking_s2.json"),
];

fn pick(sources: &[&'static str; 2], id: u8) -> Result<&'static str> {
    match id {
        1 | 2 => Ok(sources[id as usize - 1]),
        _ => Err(Error::InvalidArgument(format!(
            "scenario must be 1 or 2, got {id}"
        ))),
    }
}

pub fn sinusoid_scenario(id: u8) -> Result<SinusoidScenario> {
    let s: SinusoidScenario = serde_json::from_str(pick(&SINUSOIDS, id)?)?;
    s.model.validate()?;
    Ok(s)
}

pub fn tracking_scenario(id: u8) -> Result<TrackingScenario> {
    let s: TrackingScenario = serde_json::from_str(pick(&TRACKING, id)?)?;
    s.model.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_scenarios_load() {
        let s1 = sinusoid_scenario(1).unwrap();
        assert_eq!(s1.model.freq_variance, 151e-6);
        assert_eq!(s1.model.amp_variance, 80e-6);
        assert_eq!(s1.model.meas_variance, 0.09);
        assert_eq!(
            s1.model.initial_cov_diag,
            vec![400.0, 400.0, 400.0, 0.05, 0.05, 0.05]
        );
        assert_eq!(s1.asghf.process.psi, 0.6);
        assert_eq!(s1.asghf.measurement.tol, 0.6655);
        let s2 = sinusoid_scenario(2).unwrap();
        assert_eq!(s2.model.meas_variance, 0.18);
        assert_eq!(s2.steps, 500);
    }

    #[test]
    fn tracking_scenarios_load() {
        let s1 = tracking_scenario(1).unwrap();
        let s2 = tracking_scenario(2).unwrap();
        assert_eq!((s1.asghf.process.psi, s1.asghf.process.tol), (0.55, 0.5));
        assert_eq!((s2.asghf.process.psi, s2.asghf.process.tol), (0.525, 0.5));
        for s in [&s1, &s2] {
            assert_eq!(
                (s.asghf.measurement.psi, s.asghf.measurement.tol),
                (0.6, 0.48)
            );
            assert_eq!(s.turn_rates_deg, vec![3.0, 4.5]);
            assert_eq!(s.steps, 200);
            assert!((s.model.sigma_bearing.powi(2) - 70e-6).abs() < 1e-18);
        }
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(sinusoid_scenario(3).is_err());
        assert!(tracking_scenario(0).is_err());
    }
}
