//! Benchmark problems: the Gaussian-moment test integral, superimposed
//! sinusoids and coordinated-turn tracking with range/bearing measurements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::StateSpaceModel;

/// `sum_i x_i^(2i)` with 1-based `i`.
pub fn problem1_integrand(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, v)| v.powi(2 * (i as i32 + 1)))
        .sum()
}

/// `(2k - 1)!!`, the `2k`-th moment of N(0, 1).
pub fn double_factorial_odd(k: u32) -> f64 {
    (1..2 * k).step_by(2).map(|j| j as f64).product()
}

/// Exact Gaussian integral of [`problem1_integrand`] in `dim` dimensions.
pub fn problem1_exact(dim: usize) -> f64 {
    (1..=dim as u32).map(double_factorial_odd).sum()
}

/// Linear-Gaussian model `x' = A x + b`, `y = H x`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl StateSpaceModel for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn meas_dim(&self) -> usize {
        self.h.nrows()
    }

    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    fn measure(&self, _k: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.h * x)
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn measurement_noise(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Constants of the superimposed-sinusoids problem.
///
/// Variances are raw numbers; the sampling period is in seconds and the
/// frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidParams {
    pub sampling_period: f64,
    pub freq_variance: f64,
    pub amp_variance: f64,
    pub meas_variance: f64,
    /// `[f1, f2, f3, a1, a2, a3]`.
    pub initial_truth: Vec<f64>,
    pub initial_estimate: Vec<f64>,
    pub initial_cov_diag: Vec<f64>,
}

impl SinusoidParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_period > 0.0) {
            return Err(Error::InvalidArgument(
                "sampling period must be positive".into(),
            ));
        }
        for (name, v) in [
            ("freq_variance", self.freq_variance),
            ("amp_variance", self.amp_variance),
            ("meas_variance", self.meas_variance),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("initial_truth", &self.initial_truth),
            ("initial_estimate", &self.initial_estimate),
            ("initial_cov_diag", &self.initial_cov_diag),
        ] {
            if v.len() != SinusoidModel::STATE_DIM {
                return Err(Error::InvalidArgument(format!(
                    "{name} must have 6 entries"
                )));
            }
        }
        if self.initial_cov_diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "initial covariance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Random-walk frequencies and amplitudes observed through the in-phase and
/// quadrature sums of three sinusoids.
#[derive(Debug, Clone)]
pub struct SinusoidModel {
    pub params: SinusoidParams,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl SinusoidModel {
    pub const STATE_DIM: usize = 6;
    pub const NUM_SINUSOIDS: usize = 3;

    pub fn new(params: SinusoidParams) -> Result<Self> {
        params.validate()?;
        let (sf, sa) = (params.freq_variance, params.amp_variance);
        let q = DMatrix::from_diagonal(&DVector::from_column_slice(&[sf, sf, sf, sa, sa, sa]));
        let r = DMatrix::identity(2, 2) * params.meas_variance;
        Ok(Self { params, q, r })
    }

    pub fn initial_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.params.initial_cov_diag))
    }

    fn phase_sums(&self, k: usize, x: &DVector<f64>) -> (f64, f64) {
        let t = k as f64 * self.params.sampling_period;
        (0..Self::NUM_SINUSOIDS).fold((0.0, 0.0), |(c, s), j| {
            let (sin, cos) = (2.0 * PI * x[j] * t).sin_cos();
            let a = x[Self::NUM_SINUSOIDS + j];
            (c + a * cos, s + a * sin)
        })
    }
}

impl StateSpaceModel for SinusoidModel {
    fn state_dim(&self) -> usize {
        Self::STATE_DIM
    }

    fn meas_dim(&self) -> usize {
        2
    }

    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn measure(&self, k: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (c, s) = self.phase_sums(k, x);
        Ok(DVector::from_column_slice(&[c, s]))
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn measurement_noise(&self) -> &DMatrix<f64> {
        &self.r
    }
}

/// Constants of the coordinated-turn tracking problem. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtParams {
    pub sampling_period: f64,
    pub q: f64,
    pub sigma_range: f64,
    pub sigma_bearing: f64,
    /// `[x, vx, y, vy, omega]`.
    pub initial_truth: Vec<f64>,
    pub initial_cov_diag: Vec<f64>,
}

impl CtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_period > 0.0) || !(self.q > 0.0) {
            return Err(Error::InvalidArgument("T and q must be positive".into()));
        }
        if !(self.sigma_range > 0.0) || !(self.sigma_bearing > 0.0) {
            return Err(Error::InvalidArgument(
                "measurement noise must be positive".into(),
            ));
        }
        if self.initial_truth.len() != 5 || self.initial_cov_diag.len() != 5 {
            return Err(Error::InvalidArgument("CT state has 5 components".into()));
        }
        if self.initial_cov_diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "initial covariance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_turn_rate(mut self, omega: f64) -> Self {
        self.initial_truth[4] = omega;
        self
    }
}

/// Turn rates below this use the straight-line limit of the transition.
pub const MIN_TURN_RATE: f64 = 1e-8;

/// Coordinated-turn transition `F(omega) x` for state `[x, vx, y, vy, omega]`.
pub fn ct_transition(x: &[f64], period: f64) -> [f64; 5] {
    let (px, vx, py, vy, w) = (x[0], x[1], x[2], x[3], x[4]);
    let (s, c) = (w * period).sin_cos();
    let (sin_over_w, one_minus_cos_over_w) = if w.abs() < MIN_TURN_RATE {
        (period, 0.0)
    } else {
        (s / w, (1.0 - c) / w)
    };
    [
        px + sin_over_w * vx - one_minus_cos_over_w * vy,
        c * vx - s * vy,
        py + one_minus_cos_over_w * vx + sin_over_w * vy,
        s * vx + c * vy,
        w,
    ]
}

/// Range and four-quadrant bearing from the origin.
pub fn ct_measurement(x: &[f64]) -> Result<[f64; 2]> {
    let (px, py) = (x[0], x[2]);
    if px == 0.0 && py == 0.0 {
        return Err(Error::UndefinedBearing);
    }
    Ok([px.hypot(py), py.atan2(px)])
}

/// Process-noise covariance of the coordinated-turn model.
pub fn ct_process_noise(period: f64, q: f64) -> DMatrix<f64> {
    let t = period;
    let (a, b) = (t.powi(3) / 3.0, t.powi(2) / 2.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(5, 5, &[
        a, b, 0.0, 0.0, 0.0,
        b, t, 0.0, 0.0, 0.0,
        0.0, 0.0, a, b, 0.0,
        0.0, 0.0, b, t, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.009 * t,
    ]);
    m * q
}

#[derive(Debug, Clone)]
pub struct CoordinatedTurnModel {
    pub params: CtParams,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl CoordinatedTurnModel {
    pub fn new(params: CtParams) -> Result<Self> {
        params.validate()?;
        let q = ct_process_noise(params.sampling_period, params.q);
        let r = DMatrix::from_diagonal(&DVector::from_column_slice(&[
            params.sigma_range.powi(2),
            params.sigma_bearing.powi(2),
        ]));
        Ok(Self { params, q, r })
    }

    pub fn initial_cov(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.params.initial_cov_diag))
    }
}

impl StateSpaceModel for CoordinatedTurnModel {
    fn state_dim(&self) -> usize {
        5
    }

    fn meas_dim(&self) -> usize {
        2
    }

    fn transition(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(&ct_transition(x.as_slice(), self.params.sampling_period))
    }

    fn measure(&self, _k: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&ct_measurement(x.as_slice())?))
    }

    fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    fn measurement_noise(&self) -> &DMatrix<f64> {
        &self.r
    }

    fn angular_components(&self) -> &[usize] {
        &[1]
    }
}

/// Draws from N(0, cov) for a symmetric positive semi-definite `cov`,
/// including singular and all-zero matrices.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if let Some(c) = nalgebra::Cholesky::new(cov.clone()) {
            return Ok(Self { factor: c.l() });
        }
        let eig = SymmetricEigen::new(cov.clone());
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if eig.eigenvalues.iter().any(|&v| v < -1e-10 * scale.max(1.0)) {
            return Err(Error::NonPsdCovariance {
                matrix: cov.clone(),
            });
        }
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.factor.ncols(), |_, _| StandardNormal.sample(rng));
        &self.factor * z
    }
}

/// Independent random stream for one Monte Carlo run and purpose.
pub fn run_rng(seed: u64, run_index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(run_index);
    rng
}

/// RNG stream used for truth trajectories and measurement noise.
pub const TRUTH_STREAM: u64 = 0;
/// RNG stream used for randomised initial estimates.
pub const INITIAL_ESTIMATE_STREAM: u64 = 1;

/// Simulated truth and measurements for `k = 1..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
}

/// Iterates the model with Gaussian process and measurement noise.
pub fn simulate_truth<M: StateSpaceModel + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    steps: usize,
    seed: u64,
    run_index: u64,
) -> Result<Trajectory> {
    if x0.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.state_dim(),
            found: x0.len(),
        });
    }
    let process = GaussianSampler::new(model.process_noise())?;
    let measurement = GaussianSampler::new(model.measurement_noise())?;
    let mut rng = run_rng(seed, run_index, TRUTH_STREAM);

    let mut states = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for k in 1..=steps {
        x = model.transition(&x) + process.sample(&mut rng);
        let y = model.measure(k, &x)? + measurement.sample(&mut rng);
        states.push(x.clone());
        measurements.push(y);
    }
    Ok(Trajectory {
        states,
        measurements,
    })
}
