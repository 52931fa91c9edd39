//! Benchmark harness: the quadrature table and the Monte Carlo filter
//! comparisons behind the command-line tool.

pub mod metrics;
pub mod monte_carlo;
pub mod scenario;
pub mod table1;
pub mod timing;

pub use metrics::{compute_err, compute_rmse, MetricSeries};
pub use monte_carlo::{
    run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport, FilterSpec, Problem,
};
pub use table1::{run_table1, QuadratureVariant, Table1Report};
pub use timing::{timing_report, TimingReport};
