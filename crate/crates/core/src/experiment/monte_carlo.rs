//! Monte Carlo comparison of GHF, SGHF and ASGHF on the filtering benchmarks.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_err, compute_rmse, steady_state_mean, MetricSeries};
use super::scenario::{sinusoid_scenario, tracking_scenario, AdaptivePair};
use super::timing::{timing_report, TimingReport};
use crate::error::{Error, Result};
use crate::filter::{
    prepare_grids, run_filter_with_grids, GaussianBelief, GridSource, StateSpaceModel,
};
use crate::models::{
    run_rng, simulate_truth, CoordinatedTurnModel, CtParams, GaussianSampler, SinusoidModel,
    SinusoidParams, INITIAL_ESTIMATE_STREAM,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ASGHF_THREADS";

/// Runs with failures above this fraction abort the experiment.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

/// Steps averaged for steady-state summaries.
pub const STEADY_STATE_WINDOW: usize = 100;

pub const DEFAULT_RUNS: usize = 50;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_GHF_POINTS: usize = 3;
pub const DEFAULT_SGHF_LEVEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Sinusoids,
    Tracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Sinusoids(SinusoidParams),
    Tracking(CtParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Column name in the CSV outputs; must be unique within an experiment.
    pub name: String,
    pub grid: GridSource,
}

impl FilterSpec {
    pub fn new(grid: GridSource) -> Self {
        Self {
            name: grid.label().to_string(),
            grid,
        }
    }
}

/// Standard GHF, SGHF and ASGHF line-up.
pub fn standard_filters(
    ghf_points: usize,
    sghf_level: usize,
    asghf: AdaptivePair,
) -> Vec<FilterSpec> {
    vec![
        FilterSpec::new(GridSource::FullTensor {
            points_per_dim: ghf_points,
        }),
        FilterSpec::new(GridSource::Smolyak { level: sghf_level }),
        FilterSpec::new(GridSource::Adaptive {
            process: asghf.process,
            measurement: asghf.measurement,
            readapt_every: None,
        }),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub scenario: u8,
    pub filters: Vec<FilterSpec>,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    /// Tracking only: true turn rate in degrees per second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_rate_deg: Option<f64>,
    /// Model constants; filled in from the scenario when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    /// Worker threads; `ASGHF_THREADS` takes precedence when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn sinusoids(scenario: u8) -> Result<Self> {
        let s = sinusoid_scenario(scenario)?;
        Ok(Self {
            problem: Problem::Sinusoids,
            scenario,
            filters: standard_filters(DEFAULT_GHF_POINTS, DEFAULT_SGHF_LEVEL, s.asghf),
            runs: DEFAULT_RUNS,
            steps: s.steps,
            seed: DEFAULT_SEED,
            turn_rate_deg: None,
            model: Some(ModelParams::Sinusoids(s.model)),
            threads: None,
        })
    }

    pub fn tracking(scenario: u8, turn_rate_deg: f64) -> Result<Self> {
        let s = tracking_scenario(scenario)?;
        Ok(Self {
            problem: Problem::Tracking,
            scenario,
            filters: standard_filters(DEFAULT_GHF_POINTS, DEFAULT_SGHF_LEVEL, s.asghf),
            runs: DEFAULT_RUNS,
            steps: s.steps,
            seed: DEFAULT_SEED,
            turn_rate_deg: Some(turn_rate_deg),
            model: Some(ModelParams::Tracking(s.model)),
            threads: None,
        })
    }

    /// Fills in scenario defaults and checks every field.
    pub fn resolve(mut self) -> Result<Self> {
        if self.model.is_none() {
            self.model = Some(match self.problem {
                Problem::Sinusoids => {
                    ModelParams::Sinusoids(sinusoid_scenario(self.scenario)?.model)
                }
                Problem::Tracking => ModelParams::Tracking(tracking_scenario(self.scenario)?.model),
            });
        }
        if self.problem == Problem::Tracking && self.turn_rate_deg.is_none() {
            self.turn_rate_deg = tracking_scenario(self.scenario)?
                .turn_rates_deg
                .first()
                .copied();
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidArgument(m));
        if !(1..=2).contains(&self.scenario) {
            return invalid(format!("scenario must be 1 or 2, got {}", self.scenario));
        }
        if self.runs == 0 || self.steps == 0 {
            return invalid("runs and steps must be at least 1".into());
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1".into());
        }
        if self.filters.is_empty() {
            return invalid("at least one filter is required".into());
        }
        for (i, f) in self.filters.iter().enumerate() {
            if self.filters[..i].iter().any(|g| g.name == f.name) {
                return invalid(format!("duplicate filter name {}", f.name));
            }
            match f.grid {
                GridSource::FullTensor { points_per_dim: 0 } | GridSource::Smolyak { level: 0 } => {
                    return invalid(format!("{}: points and level must be at least 1", f.name));
                }
                GridSource::Adaptive {
                    process,
                    measurement,
                    ..
                } => {
                    process.validate()?;
                    measurement.validate()?;
                }
                _ => {}
            }
        }
        match (&self.problem, &self.model) {
            (Problem::Sinusoids, Some(ModelParams::Sinusoids(p))) => p.validate()?,
            (Problem::Tracking, Some(ModelParams::Tracking(p))) => {
                p.validate()?;
                match self.turn_rate_deg {
                    Some(w) if w.is_finite() => {}
                    _ => return invalid("tracking needs a finite turn rate".into()),
                }
            }
            (_, None) => {}
            _ => return invalid("model parameters do not match the problem".into()),
        }
        Ok(())
    }

    fn thread_count(&self) -> Result<Option<usize>> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(Error::InvalidArgument(format!(
                    "{THREADS_ENV} must be a positive integer"
                ))),
            },
            Err(_) => Ok(self.threads),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub name: String,
    pub kind: String,
    /// Smallest and largest per-step point count (prediction plus update)
    /// over successful runs.
    pub points_per_step_min: usize,
    pub points_per_step_max: usize,
    pub process_points_max: usize,
    pub measurement_points_max: usize,
    pub successful_runs: usize,
    pub failures: usize,
    /// Median wall-clock of one run, grid construction included.
    pub median_seconds: f64,
    /// Mean over the last steps of each metric, keyed like the CSV files.
    pub steady_state: Vec<(String, f64)>,
}

impl FilterSummary {
    pub fn steady(&self, metric: &str) -> Option<f64> {
        self.steady_state
            .iter()
            .find(|(m, _)| m == metric)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// Fully resolved configuration.
    pub config: ExperimentConfig,
    pub steady_state_window: usize,
    pub filters: Vec<FilterSummary>,
    pub timing: TimingReport,
}

impl ExperimentReport {
    pub fn filter(&self, name: &str) -> Option<&FilterSummary> {
        self.filters.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub series: MetricSeries,
}

impl ExperimentOutcome {
    /// Writes one CSV per metric and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (i, metric) in self.series.metrics.iter().enumerate() {
            let path = dir.join(format!("{metric}.csv"));
            fs::write(&path, self.series.to_csv(i))?;
            paths.push(path);
        }
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(&self.report)?)?;
        paths.push(path);
        Ok(paths)
    }
}

/// Per-run result of one filter.
struct FilterRunResult {
    /// `errors[step]` holds truth minus estimate for the scored components.
    errors: Vec<Vec<f64>>,
    seconds: f64,
    process_points: usize,
    measurement_points: usize,
}

struct Setup {
    model: Box<dyn StateSpaceModel>,
    x0: DVector<f64>,
    prior_cov: nalgebra::DMatrix<f64>,
    /// Fixed prior mean; `None` draws it from N(x0, P0) per run.
    prior_mean: Option<DVector<f64>>,
    /// State components scored at each step.
    scored: Vec<usize>,
    metrics: Vec<&'static str>,
}

fn setup(config: &ExperimentConfig) -> Result<Setup> {
    match config.model.as_ref().expect("resolved config") {
        ModelParams::Sinusoids(p) => {
            let model = SinusoidModel::new(p.clone())?;
            Ok(Setup {
                x0: DVector::from_column_slice(&p.initial_truth),
                prior_cov: model.initial_cov(),
                prior_mean: Some(DVector::from_column_slice(&p.initial_estimate)),
                model: Box::new(model),
                scored: vec![0, 1, 2, 3, 4, 5],
                metrics: vec!["err_freq", "err_amp"],
            })
        }
        ModelParams::Tracking(p) => {
            let omega = config.turn_rate_deg.unwrap_or(0.0).to_radians();
            let model = CoordinatedTurnModel::new(p.clone().with_turn_rate(omega))?;
            Ok(Setup {
                x0: DVector::from_column_slice(&model.params.initial_truth),
                prior_cov: model.initial_cov(),
                prior_mean: None,
                model: Box::new(model),
                // x, y, vx, vy
                scored: vec![0, 2, 1, 3],
                metrics: vec!["rmse_pos", "rmse_vel"],
            })
        }
    }
}

fn run_one_filter(
    setup: &Setup,
    spec: &FilterSpec,
    prior: &GaussianBelief,
    truth: &[DVector<f64>],
    measurements: &[DVector<f64>],
) -> Option<FilterRunResult> {
    let model = setup.model.as_ref();
    let start = Instant::now();
    let grids = prepare_grids(model, prior, 1, &spec.grid).ok()?;
    let (process_points, measurement_points) = (grids.process.len(), grids.measurement.len());
    let run = run_filter_with_grids(model, measurements, prior, &spec.grid, grids).ok()?;
    let seconds = start.elapsed().as_secs_f64();

    let mut errors = Vec::with_capacity(truth.len());
    for (x, est) in truth.iter().zip(&run.estimates) {
        if !est.is_finite() {
            return None;
        }
        errors.push(setup.scored.iter().map(|&i| x[i] - est.mean[i]).collect());
    }
    Some(FilterRunResult {
        errors,
        seconds,
        process_points,
        measurement_points,
    })
}

fn run_one(
    setup: &Setup,
    config: &ExperimentConfig,
    run_index: usize,
) -> Result<Vec<Option<FilterRunResult>>> {
    let model = setup.model.as_ref();
    let traj = simulate_truth(
        model,
        &setup.x0,
        config.steps,
        config.seed,
        run_index as u64,
    )?;
    let mean = match &setup.prior_mean {
        Some(m) => m.clone(),
        None => {
            let mut rng = run_rng(config.seed, run_index as u64, INITIAL_ESTIMATE_STREAM);
            &setup.x0 + GaussianSampler::new(&setup.prior_cov)?.sample(&mut rng)
        }
    };
    let prior = GaussianBelief::new(mean, setup.prior_cov.clone())?;
    Ok(config
        .filters
        .iter()
        .map(|spec| run_one_filter(setup, spec, &prior, &traj.states, &traj.measurements))
        .collect())
}

/// Runs every configured filter on the same simulated measurement streams.
///
/// Runs execute in parallel; aggregation is in run order so the metric
/// series depend only on the configuration.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentOutcome> {
    let config = config.resolve()?;
    let setup = setup(&config)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.thread_count()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_run: Vec<Vec<Option<FilterRunResult>>> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|j| run_one(&setup, &config, j))
            .collect::<Result<_>>()
    })?;

    let nf = config.filters.len();
    let mut values = vec![vec![Vec::with_capacity(config.steps); nf]; setup.metrics.len()];
    let mut summaries = Vec::with_capacity(nf);
    let mut timings = Vec::with_capacity(nf);
    for (fi, spec) in config.filters.iter().enumerate() {
        let ok: Vec<&FilterRunResult> = per_run.iter().filter_map(|r| r[fi].as_ref()).collect();
        let failures = config.runs - ok.len();
        if failures as f64 > MAX_FAILURE_FRACTION * config.runs as f64 {
            return Err(Error::TooManyFailures {
                filter: spec.name.clone(),
                failed: failures,
                runs: config.runs,
            });
        }

        for k in 0..config.steps {
            match config.problem {
                Problem::Sinusoids => {
                    let freq: Vec<[f64; 3]> = ok
                        .iter()
                        .map(|r| [r.errors[k][0], r.errors[k][1], r.errors[k][2]])
                        .collect();
                    let amp: Vec<[f64; 3]> = ok
                        .iter()
                        .map(|r| [r.errors[k][3], r.errors[k][4], r.errors[k][5]])
                        .collect();
                    values[0][fi].push(compute_err(&freq));
                    values[1][fi].push(compute_err(&amp));
                }
                Problem::Tracking => {
                    let pos: Vec<[f64; 2]> = ok
                        .iter()
                        .map(|r| [r.errors[k][0], r.errors[k][1]])
                        .collect();
                    let vel: Vec<[f64; 2]> = ok
                        .iter()
                        .map(|r| [r.errors[k][2], r.errors[k][3]])
                        .collect();
                    values[0][fi].push(compute_rmse(&pos));
                    values[1][fi].push(compute_rmse(&vel));
                }
            }
        }

        let per_step: Vec<usize> = ok
            .iter()
            .map(|r| r.process_points + r.measurement_points)
            .collect();
        let seconds: Vec<f64> = ok.iter().map(|r| r.seconds).collect();
        timings.push((spec.name.clone(), seconds));
        summaries.push(FilterSummary {
            name: spec.name.clone(),
            kind: spec.grid.label().to_string(),
            points_per_step_min: per_step.iter().copied().min().unwrap_or(0),
            points_per_step_max: per_step.iter().copied().max().unwrap_or(0),
            process_points_max: ok.iter().map(|r| r.process_points).max().unwrap_or(0),
            measurement_points_max: ok.iter().map(|r| r.measurement_points).max().unwrap_or(0),
            successful_runs: ok.len(),
            failures,
            median_seconds: 0.0,
            steady_state: setup
                .metrics
                .iter()
                .enumerate()
                .map(|(mi, m)| {
                    (
                        m.to_string(),
                        steady_state_mean(&values[mi][fi], STEADY_STATE_WINDOW),
                    )
                })
                .collect(),
        });
    }

    let reference = config
        .filters
        .iter()
        .find(|f| f.grid.label() == "ghf")
        .map_or_else(|| config.filters[0].name.clone(), |f| f.name.clone());
    let timing = timing_report(&timings, &reference);
    for (s, e) in summaries.iter_mut().zip(&timing.entries) {
        s.median_seconds = e.median_seconds;
    }

    let series = MetricSeries {
        metrics: setup.metrics.iter().map(|m| m.to_string()).collect(),
        filters: config.filters.iter().map(|f| f.name.clone()).collect(),
        values,
    };
    Ok(ExperimentOutcome {
        report: ExperimentReport {
            config,
            steady_state_window: STEADY_STATE_WINDOW,
            filters: summaries,
            timing,
        },
        series,
    })
}
