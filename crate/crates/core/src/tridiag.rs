//! Implicit QL eigen-solver for symmetric tridiagonal matrices.
//!
//! Only the first row of the eigenvector matrix is tracked, which is all the
//! Golub-Welsch construction of Gaussian quadrature rules needs: the weight of
//! node `j` is the squared first component of the `j`-th normalized eigenvector.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    pub first_components: Vec<f64>,
}

/// `diag` has length m, `offdiag` has length m - 1 (entry `i` couples rows `i` and `i + 1`).
pub fn symmetric_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: offdiag.len(),
        });
    }

    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence);
            }

            // Wilkinson-style shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    Ok(TridiagonalEigen {
        values: d,
        first_components: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
        let n = diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn one_by_one() {
        let eig = symmetric_tridiagonal_eigen(&[3.5], &[]).unwrap();
        assert_eq!(eig.values, vec![3.5]);
        assert_eq!(eig.first_components, vec![1.0]);
    }

    #[test]
    fn matches_dense_solver() {
        let diag = [2.0, -1.0, 0.5, 4.0, 1.5, -3.0];
        let off = [1.0, 0.3, -2.0, 0.7, 1.1];
        let eig = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let reference = SymmetricEigen::new(dense(&diag, &off));

        let mut ours: Vec<(f64, f64)> = eig
            .values
            .iter()
            .zip(&eig.first_components)
            .map(|(&v, &z)| (v, z * z))
            .collect();
        ours.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut theirs: Vec<(f64, f64)> = (0..diag.len())
            .map(|j| {
                let z = reference.eigenvectors[(0, j)];
                (reference.eigenvalues[j], z * z)
            })
            .collect();
        theirs.sort_by(|a, b| a.0.total_cmp(&b.0));

        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a.0 - b.0).abs() < 1e-12, "{a:?} vs {b:?}");
            assert!((a.1 - b.1).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(symmetric_tridiagonal_eigen(&[], &[]).is_err());
        assert!(symmetric_tridiagonal_eigen(&[1.0, 2.0], &[]).is_err());
    }
}
