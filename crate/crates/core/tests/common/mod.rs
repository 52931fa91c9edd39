#![allow(dead_code)]

use asghf::filter::GaussianBelief;
use asghf::models::LinearGaussianModel;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `E[x^k]` for a standard normal, by the recursion `E[x^k] = (k-1) E[x^(k-2)]`.
pub fn normal_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

pub fn monomial_moment(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| normal_moment(a)).product()
}

/// Every exponent vector of length `dim` with total degree at most `degree`.
pub fn monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for a in 0..=degree - used {
                let mut v = prefix.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn eval_monomial(alpha: &[u32], x: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(x)
        .map(|(&a, &v)| v.powi(a as i32))
        .product()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let l = random_matrix(rng, n, n) * 0.5;
    &l * l.transpose() + DMatrix::identity(n, n) * floor
}

/// Stable random linear-Gaussian model and a prior for it.
pub fn random_linear_model(seed: u64, n: usize, p: usize) -> (LinearGaussianModel, GaussianBelief) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = random_matrix(&mut rng, n, n);
    let norm = a.clone().svd(false, false).singular_values.max();
    a *= 0.95 / norm.max(1.0);
    let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let h = random_matrix(&mut rng, p, n);
    let q = random_spd(&mut rng, n, 0.1);
    let r = random_spd(&mut rng, p, 0.2);
    let mean = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let cov = random_spd(&mut rng, n, 0.5);
    (
        LinearGaussianModel { a, b, h, q, r },
        GaussianBelief::new(mean, cov).unwrap(),
    )
}

/// Closed-form Kalman filter, written out independently of the library.
pub fn kalman(
    model: &LinearGaussianModel,
    ys: &[DVector<f64>],
    prior: &GaussianBelief,
) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let mut m = prior.mean.clone();
    let mut p = prior.cov.clone();
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let mp = &model.a * &m + &model.b;
        let pp = &model.a * &p * model.a.transpose() + &model.q;
        let s = &model.h * &pp * model.h.transpose() + &model.r;
        let k = &pp * model.h.transpose() * s.try_inverse().unwrap();
        m = &mp + &k * (y - &model.h * &mp);
        p = &pp - &k * &model.h * &pp;
        p = (&p + p.transpose()) * 0.5;
        out.push((m.clone(), p.clone()));
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Symmetric within `tol` and with smallest eigenvalue above `-tol`.
pub fn is_symmetric_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    let scale = max_abs(m).max(1.0);
    if max_abs(&(m - m.transpose())) > tol * scale {
        return false;
    }
    m.clone().symmetric_eigenvalues().min() > -tol * scale
}
