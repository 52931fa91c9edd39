//! Quadrature-driven Gaussian filter.
//!
//! Predict and update are moment matching over a [`WeightedGrid`] in
//! standard-normal space, mapped into state space through a triangular square
//! root of the current covariance. The grid source decides the filter variant:
//! a full tensor Gauss-Hermite grid (GHF), an isotropic Smolyak grid (SGHF) or
//! a compiled dimension-adaptive grid (ASGHF).

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::adaptive::{adapt, AdaptConfig, AdaptReport};
use crate::error::{Error, Result};
use crate::grid::WeightedGrid;
use crate::smolyak::{full_tensor_grid, smolyak_grid};

/// Mean and covariance of a Gaussian approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        Ok(Self {
            mean,
            cov: symmetrize(cov),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_finite(&self) -> bool {
        self.mean
            .iter()
            .chain(self.cov.iter())
            .all(|v| v.is_finite())
    }
}

/// Additive-noise state-space model `x_k = phi(x_{k-1}) + w_k`, `y_k = gamma_k(x_k) + v_k`.
pub trait StateSpaceModel: Send + Sync {
    fn state_dim(&self) -> usize;

    fn meas_dim(&self) -> usize;

    fn transition(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Noise-free measurement at time index `k` (the first update uses `k = 1`).
    fn measure(&self, k: usize, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn process_noise(&self) -> &DMatrix<f64>;

    fn measurement_noise(&self) -> &DMatrix<f64>;

    /// Measurement components whose residuals are wrapped to (-pi, pi].
    fn angular_components(&self) -> &[usize] {
        &[]
    }
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

const JITTER_RETRIES: usize = 3;

fn cholesky_with_jitter(cov: &DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Some(c);
    }
    let n = cov.nrows().max(1);
    let scale = (cov.trace() / n as f64).abs().max(f64::EPSILON);
    let mut eps = 1e-9 * scale;
    for _ in 0..JITTER_RETRIES {
        let jittered = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * eps;
        if let Some(c) = Cholesky::new(jittered) {
            return Some(c);
        }
        eps *= 10.0;
    }
    None
}

/// Lower-triangular `S` with `S S^T = cov`, retrying with growing diagonal
/// jitter when the plain factorization fails.
pub fn sqrt_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            found: cov.ncols(),
        });
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonPsdCovariance {
            matrix: cov.clone(),
        });
    }
    cholesky_with_jitter(cov)
        .map(|c| c.l())
        .ok_or_else(|| Error::NonPsdCovariance {
            matrix: cov.clone(),
        })
}

fn check_grid(grid: &WeightedGrid, dim: usize) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: grid.dim(),
        });
    }
    Ok(())
}

/// State-space sigma points `m + S xi` as columns.
fn transformed_points(belief: &GaussianBelief, grid: &WeightedGrid) -> Result<DMatrix<f64>> {
    let n = belief.dim();
    let s = sqrt_factor(&belief.cov)?;
    let xi = DMatrix::from_column_slice(n, grid.len(), &flat_points(grid));
    let mut chi = s * xi;
    for mut col in chi.column_iter_mut() {
        col += &belief.mean;
    }
    Ok(chi)
}

fn flat_points(grid: &WeightedGrid) -> Vec<f64> {
    grid.iter().flat_map(|(p, _)| p.iter().copied()).collect()
}

fn weighted_mean(values: &DMatrix<f64>, weights: &[f64]) -> DVector<f64> {
    values * DVector::from_column_slice(weights)
}

/// `sum_i w_i a_i b_i^T` for column sets `a`, `b`.
fn weighted_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut scaled = b.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(weights) {
        col *= w;
    }
    a * scaled.transpose()
}

fn ensure_finite(values: &DMatrix<f64>, points: &DMatrix<f64>) -> Result<()> {
    for (j, col) in values.column_iter().enumerate() {
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalEvaluation {
                point: points.column(j).iter().copied().collect(),
            });
        }
    }
    Ok(())
}

/// Time update: propagate the belief through the process function.
pub fn predict<M: StateSpaceModel + ?Sized>(
    belief: &GaussianBelief,
    model: &M,
    grid: &WeightedGrid,
) -> Result<GaussianBelief> {
    let n = model.state_dim();
    check_grid(grid, n)?;
    let chi = transformed_points(belief, grid)?;
    let mut propagated = DMatrix::zeros(n, grid.len());
    for (j, col) in chi.column_iter().enumerate() {
        let x = model.transition(&col.into_owned());
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        propagated.set_column(j, &x);
    }
    ensure_finite(&propagated, &chi)?;

    let weights = grid.weights();
    let mean = weighted_mean(&propagated, weights);
    let mut centered = propagated;
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = weighted_cross(&centered, &centered, weights) + model.process_noise();
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(cov),
    })
}

/// Measurement update at time index `k`.
pub fn update<M: StateSpaceModel + ?Sized>(
    predicted: &GaussianBelief,
    y: &DVector<f64>,
    k: usize,
    model: &M,
    grid: &WeightedGrid,
) -> Result<GaussianBelief> {
    let n = model.state_dim();
    let p = model.meas_dim();
    check_grid(grid, n)?;
    if y.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: y.len(),
        });
    }
    let angular = model.angular_components();
    let chi = transformed_points(predicted, grid)?;
    let mut z = DMatrix::zeros(p, grid.len());
    for (j, col) in chi.column_iter().enumerate() {
        let zj = model.measure(k, &col.into_owned())?;
        if zj.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: zj.len(),
            });
        }
        z.set_column(j, &zj);
    }
    ensure_finite(&z, &chi)?;

    let weights = grid.weights();
    // Angular means are taken relative to the first point so that a spread
    // straddling +-pi averages correctly.
    let reference: Vec<f64> = angular.iter().map(|&a| z[(a, 0)]).collect();
    for (&a, &r) in angular.iter().zip(&reference) {
        for j in 0..z.ncols() {
            z[(a, j)] = r + wrap_angle(z[(a, j)] - r);
        }
    }
    let mut y_hat = weighted_mean(&z, weights);
    for &a in angular {
        y_hat[a] = wrap_angle(y_hat[a]);
    }

    let mut dz = z;
    for mut col in dz.column_iter_mut() {
        col -= &y_hat;
    }
    for &a in angular {
        for j in 0..dz.ncols() {
            dz[(a, j)] = wrap_angle(dz[(a, j)]);
        }
    }
    let mut dx = chi;
    for mut col in dx.column_iter_mut() {
        col -= &predicted.mean;
    }

    let p_yy = symmetrize(weighted_cross(&dz, &dz, weights) + model.measurement_noise());
    let p_xy = weighted_cross(&dx, &dz, weights);

    let chol = cholesky_with_jitter(&p_yy).ok_or(Error::SingularInnovation)?;
    let gain = chol.solve(&p_xy.transpose()).transpose();

    let mut innovation = y - &y_hat;
    for &a in angular {
        innovation[a] = wrap_angle(innovation[a]);
    }
    let mean = &predicted.mean + &gain * innovation;
    let cov = &predicted.cov - &gain * &p_yy * gain.transpose();
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(cov),
    })
}

/// Where the filter gets its quadrature grids from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridSource {
    /// Full tensor Gauss-Hermite grid with `points_per_dim` nodes per axis.
    FullTensor { points_per_dim: usize },
    /// Isotropic Smolyak grid of accuracy level `level`.
    Smolyak { level: usize },
    /// Dimension-adaptive grids, one adapted on the process function and one
    /// on the measurement function at the prior.
    Adaptive {
        process: AdaptConfig,
        measurement: AdaptConfig,
        /// Rebuild both grids at the current belief every this many steps.
        /// `None` keeps the initial grids for the whole run.
        #[serde(default)]
        readapt_every: Option<usize>,
    },
}

impl GridSource {
    pub fn label(&self) -> &'static str {
        match self {
            GridSource::FullTensor { .. } => "ghf",
            GridSource::Smolyak { .. } => "sghf",
            GridSource::Adaptive { .. } => "asghf",
        }
    }
}

/// Process and measurement grids used by one filter run.
#[derive(Debug, Clone)]
pub struct FilterGrids {
    pub process: WeightedGrid,
    pub measurement: WeightedGrid,
    pub process_report: Option<AdaptReport>,
    pub measurement_report: Option<AdaptReport>,
}

impl FilterGrids {
    /// The same grid for prediction and update.
    pub fn shared(grid: WeightedGrid) -> Self {
        Self {
            process: grid.clone(),
            measurement: grid,
            process_report: None,
            measurement_report: None,
        }
    }

    /// Points evaluated per filter step (prediction plus update).
    pub fn points_per_step(&self) -> usize {
        self.process.len() + self.measurement.len()
    }
}

/// Builds the grids for `source`. Adaptive grids are fitted to the process
/// function and to the measurement function at time index `k`, both pulled
/// back through `belief`.
pub fn prepare_grids<M: StateSpaceModel + ?Sized>(
    model: &M,
    belief: &GaussianBelief,
    k: usize,
    source: &GridSource,
) -> Result<FilterGrids> {
    let n = model.state_dim();
    match *source {
        GridSource::FullTensor { points_per_dim } => {
            Ok(FilterGrids::shared(full_tensor_grid(n, points_per_dim)?))
        }
        GridSource::Smolyak { level } => Ok(FilterGrids::shared(smolyak_grid(n, level)?)),
        GridSource::Adaptive {
            process,
            measurement,
            ..
        } => {
            let s = sqrt_factor(&belief.cov)?;
            let to_state = |xi: &[f64]| &belief.mean + &s * DVector::from_column_slice(xi);

            let proc = adapt(
                |xi| model.transition(&to_state(xi)).as_slice().to_vec(),
                n,
                &process,
            )?;

            let mut failure = None;
            let meas = adapt(
                |xi| match model.measure(k, &to_state(xi)) {
                    Ok(z) => z.as_slice().to_vec(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        vec![f64::NAN; model.meas_dim()]
                    }
                },
                n,
                &measurement,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let meas = meas?;

            Ok(FilterGrids {
                process: proc.grid.grid,
                measurement: meas.grid.grid,
                process_report: Some(proc.report),
                measurement_report: Some(meas.report),
            })
        }
    }
}

/// Output of [`run_filter_with_grids`].
#[derive(Debug, Clone)]
pub struct FilterRun {
    /// Posterior beliefs for `k = 1..=K`.
    pub estimates: Vec<GaussianBelief>,
    /// Grids in use at the start of the run.
    pub grids: FilterGrids,
}

/// Alternating predict/update over the measurement sequence.
pub fn run_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    measurements: &[DVector<f64>],
    prior: &GaussianBelief,
    source: &GridSource,
) -> Result<Vec<GaussianBelief>> {
    let grids = prepare_grids(model, prior, 1, source)?;
    run_filter_with_grids(model, measurements, prior, source, grids).map(|r| r.estimates)
}

/// As [`run_filter`], starting from grids that were already built for `source`.
pub fn run_filter_with_grids<M: StateSpaceModel + ?Sized>(
    model: &M,
    measurements: &[DVector<f64>],
    prior: &GaussianBelief,
    source: &GridSource,
    grids: FilterGrids,
) -> Result<FilterRun> {
    if prior.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            found: prior.dim(),
        });
    }
    let readapt_every = match source {
        GridSource::Adaptive {
            readapt_every: Some(every),
            ..
        } if *every > 0 => Some(*every),
        _ => None,
    };

    let initial = grids.clone();
    let mut current = grids;
    let mut belief = prior.clone();
    let mut estimates = Vec::with_capacity(measurements.len());
    for (i, y) in measurements.iter().enumerate() {
        let k = i + 1;
        if let Some(every) = readapt_every {
            if k > 1 && (k - 1) % every == 0 {
                current = prepare_grids(model, &belief, k, source)?;
            }
        }
        let predicted = predict(&belief, model, &current.process)?;
        belief = update(&predicted, y, k, model, &current.measurement)?;
        estimates.push(belief.clone());
    }
    Ok(FilterRun {
        estimates,
        grids: initial,
    })
}
