use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use asghf::adaptive::{adapt, AdaptConfig};
use asghf::experiment::monte_carlo::{DEFAULT_GHF_POINTS, DEFAULT_SGHF_LEVEL};
use asghf::experiment::table1::{default_variants, write_table1};
use asghf::experiment::{
    run_experiment, run_table1, ExperimentConfig, ExperimentOutcome, FilterSpec, Problem,
};
use asghf::filter::GridSource;
use asghf::models::{problem1_exact, problem1_integrand};
use asghf::smolyak::{full_tensor_grid, smolyak_grid};
use asghf::{Error, Result, WeightedGrid};

#[derive(Parser)]
#[command(
    name = "asghf",
    version,
    about = "Sparse-grid Gauss-Hermite quadrature and filtering benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare GH, SGH and ASGH rules on sum_i x_i^(2i).
    Table1 {
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value = "results/table1")]
        out: PathBuf,
    },
    /// Monte Carlo study on the superimposed-sinusoid problem.
    Sinusoids(FilterArgs),
    /// Monte Carlo study on coordinated-turn tracking.
    Tracking {
        #[command(flatten)]
        common: FilterArgs,
        /// True turn rate in degrees per second.
        #[arg(long)]
        omega_deg: Option<f64>,
    },
    /// Integrate one test function with a single rule.
    Quad {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = Integrand::Problem1)]
        integrand: Integrand,
        #[arg(long, value_enum, default_value_t = FilterKind::Asghf)]
        filter: FilterKind,
        #[arg(long, default_value_t = DEFAULT_GHF_POINTS)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_SGHF_LEVEL)]
        level: usize,
        #[arg(long, default_value_t = 0.4)]
        psi: f64,
        #[arg(long, default_value_t = 1.6)]
        tol: f64,
        /// Write the grid as `grid.csv` (plus `grid.json` for adaptive rules).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FilterArgs {
    /// JSON experiment configuration; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    /// Filters to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    filter: Vec<FilterKind>,
    /// Nodes per axis for GHF.
    #[arg(long)]
    points: Option<usize>,
    /// Accuracy level for SGHF.
    #[arg(long)]
    level: Option<usize>,
    /// ASGHF error weights: `process,measurement` or one value for both.
    #[arg(long, value_delimiter = ',')]
    psi: Vec<f64>,
    /// ASGHF tolerances: `process,measurement` or one value for both.
    #[arg(long, value_delimiter = ',')]
    tol: Vec<f64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterKind {
    Ghf,
    Sghf,
    Asghf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Integrand {
    /// sum_i x_i^(2i)
    Problem1,
    /// sum_i x_i^2
    SumSquares,
    /// prod_i cos(x_i)
    CosProduct,
}

impl Integrand {
    fn eval(self, x: &[f64]) -> f64 {
        match self {
            Integrand::Problem1 => problem1_integrand(x),
            Integrand::SumSquares => x.iter().map(|v| v * v).sum(),
            Integrand::CosProduct => x.iter().map(|v| v.cos()).product(),
        }
    }

    fn exact(self, dim: usize) -> f64 {
        match self {
            Integrand::Problem1 => problem1_exact(dim),
            Integrand::SumSquares => dim as f64,
            Integrand::CosProduct => (-0.5 * dim as f64).exp(),
        }
    }
}

fn pair(values: &[f64], name: &str) -> Result<Option<(f64, f64)>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some((*v, *v))),
        [p, m] => Ok(Some((*p, *m))),
        _ => Err(Error::InvalidArgument(format!(
            "--{name} takes one or two values"
        ))),
    }
}

fn apply_overrides(mut config: ExperimentConfig, args: &FilterArgs) -> Result<ExperimentConfig> {
    let psi = pair(&args.psi, "psi")?;
    let tol = pair(&args.tol, "tol")?;
    for spec in &mut config.filters {
        match &mut spec.grid {
            GridSource::FullTensor { points_per_dim } => {
                *points_per_dim = args.points.unwrap_or(*points_per_dim);
            }
            GridSource::Smolyak { level } => *level = args.level.unwrap_or(*level),
            GridSource::Adaptive {
                process,
                measurement,
                ..
            } => {
                if let Some((p, m)) = psi {
                    process.psi = p;
                    measurement.psi = m;
                }
                if let Some((p, m)) = tol {
                    process.tol = p;
                    measurement.tol = m;
                }
            }
        }
    }
    if !args.filter.is_empty() {
        let keep: Vec<&str> = args
            .filter
            .iter()
            .map(|k| match k {
                FilterKind::Ghf => "ghf",
                FilterKind::Sghf => "sghf",
                FilterKind::Asghf => "asghf",
            })
            .collect();
        config
            .filters
            .retain(|f: &FilterSpec| keep.contains(&f.grid.label()));
    }
    config.runs = args.runs.unwrap_or(config.runs);
    config.steps = args.steps.unwrap_or(config.steps);
    config.seed = args.seed.unwrap_or(config.seed);
    config.threads = args.threads.or(config.threads);
    Ok(config)
}

fn load_config(path: &Path, problem: Problem) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    if config.problem != problem {
        return Err(Error::InvalidArgument(format!(
            "{} describes a different problem",
            path.display()
        )));
    }
    Ok(config)
}

fn print_outcome(outcome: &ExperimentOutcome, paths: &[PathBuf]) {
    for f in &outcome.report.filters {
        let steady: Vec<String> = f
            .steady_state
            .iter()
            .map(|(m, v)| format!("{m}={v:.6e}"))
            .collect();
        println!(
            "{:<8} points/step={:<5} failures={:<3} median={:.4}s {}",
            f.name,
            f.points_per_step_max,
            f.failures,
            f.median_seconds,
            steady.join(" ")
        );
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run_filters(config: ExperimentConfig, out: PathBuf) -> Result<()> {
    let outcome = run_experiment(config)?;
    let paths = outcome.write(&out)?;
    print_outcome(&outcome, &paths);
    Ok(())
}

#[derive(Serialize)]
struct QuadOutput {
    integrand: Integrand,
    dim: usize,
    rule: String,
    points: usize,
    value: f64,
    exact: f64,
    percent_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn quad(
    dim: usize,
    integrand: Integrand,
    filter: FilterKind,
    points: usize,
    level: usize,
    psi: f64,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<()> {
    let f = |x: &[f64]| vec![integrand.eval(x)];
    let save_plain = |grid: &WeightedGrid| -> Result<()> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir)?;
            grid.write_csv(fs::File::create(dir.join("grid.csv"))?)?;
        }
        Ok(())
    };
    let (rule, grid) = match filter {
        FilterKind::Ghf => {
            let g = full_tensor_grid(dim, points)?;
            save_plain(&g)?;
            (format!("GH_{points}"), g)
        }
        FilterKind::Sghf => {
            let g = smolyak_grid(dim, level)?;
            save_plain(&g)?;
            (format!("SGH_{level}"), g)
        }
        FilterKind::Asghf => {
            let outcome = adapt(f, dim, &AdaptConfig::new(psi, tol)?)?;
            if let Some(dir) = &out {
                outcome.grid.save(dir, "grid")?;
            }
            (format!("ASGH_{{{psi},{tol}}}"), outcome.grid.grid)
        }
    };
    let value = grid.apply(f)?[0];
    let exact = integrand.exact(dim);
    let report = QuadOutput {
        integrand,
        dim,
        rule,
        points: grid.len(),
        value,
        exact,
        percent_error: 100.0 * (value - exact).abs() / exact.abs(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Table1 { dim, out } => {
            let report = run_table1(dim, &default_variants())?;
            println!(
                "{:<16} {:>7} {:>16} {:>12} {:>12}",
                "rule", "points", "value", "%error", "published"
            );
            for r in &report.rows {
                println!(
                    "{:<16} {:>7} {:>16.6} {:>12.4e} {:>12}",
                    r.label,
                    r.points,
                    r.value,
                    r.percent_error,
                    r.published_percent_error
                        .map_or(String::from("-"), |v| v.to_string())
                );
            }
            let (csv, json) = write_table1(&report, &out)?;
            println!("wrote {}\nwrote {}", csv.display(), json.display());
            Ok(())
        }
        Command::Sinusoids(args) => {
            let base = match &args.config {
                Some(p) => load_config(p, Problem::Sinusoids)?,
                None => ExperimentConfig::sinusoids(args.scenario)?,
            };
            let config = apply_overrides(base, &args)?;
            let out = args.out.clone().unwrap_or_else(|| {
                PathBuf::from(format!("results/sinusoids_s{}", config.scenario))
            });
            run_filters(config, out)
        }
        Command::Tracking { common, omega_deg } => {
            let mut base = match &common.config {
                Some(p) => load_config(p, Problem::Tracking)?,
                None => ExperimentConfig::tracking(common.scenario, omega_deg.unwrap_or(3.0))?,
            };
            if omega_deg.is_some() {
                base.turn_rate_deg = omega_deg;
            }
            let config = apply_overrides(base, &common)?.resolve()?;
            let out = common.out.clone().unwrap_or_else(|| {
                PathBuf::from(format!(
                    "results/tracking_s{}_w{}",
                    config.scenario,
                    config.turn_rate_deg.unwrap_or_default()
                ))
            });
            run_filters(config, out)
        }
        Command::Quad {
            dim,
            integrand,
            filter,
            points,
            level,
            psi,
            tol,
            out,
        } => quad(dim, integrand, filter, points, level, psi, tol, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
