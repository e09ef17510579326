//! Dense symmetric eigensolvers.
//!
//! The cyclic Jacobi method is used throughout: it is slower than a
//! tridiagonal QR for large matrices but delivers small eigenvalues of
//! positive definite matrices to high *relative* accuracy, which is what the
//! spectral constants and observability bounds depend on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricDecomposition {
    pub values: DVector<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Symmetrizes in place and returns the max asymmetry that was removed.
pub fn symmetrize(m: &mut DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = m[(i, j)];
            let b = m[(j, i)];
            worst = worst.max((a - b).abs());
            let avg = 0.5 * (a + b);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    worst
}

pub fn jacobi_eigen(matrix: &DMatrix<f64>) -> Result<SymmetricDecomposition> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: matrix.ncols() });
    }
    let mut a = matrix.clone();
    symmetrize(&mut a);
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = f64::MIN_POSITIVE.max(scale * 1e-300);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let threshold = f64::EPSILON * (app * aqq).abs().sqrt();
                if apq.abs() <= threshold.max(floor) {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            return Err(Error::NonConvergence { sweeps, off });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    Ok(SymmetricDecomposition { values, vectors, sweeps })
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Smallest eigenpair of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct MinEigen {
    pub value: f64,
    pub vector: DVector<f64>,
    pub residual: f64,
    /// Ratio of the largest to the smallest eigenvalue magnitude.
    pub condition: f64,
}

/// Smallest eigenvalue and a unit eigenvector, with the residual
/// `‖Gv − λv‖ ≤ tol·‖G‖` enforced.
pub fn min_eigenvalue(g: &DMatrix<f64>, tol: f64) -> Result<MinEigen> {
    let dec = jacobi_eigen(g)?;
    let n = g.nrows();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let value = dec.values[0];
    let vector: DVector<f64> = dec.vectors.column(0).into_owned();
    let mut sym = g.clone();
    symmetrize(&mut sym);
    let residual = (&sym * &vector - &vector * value).norm();
    let norm = dec.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if residual > tol * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NonConvergence { sweeps: dec.sweeps, off: residual });
    }
    let condition = if value.abs() > 0.0 { norm / value.abs() } else { f64::INFINITY };
    Ok(MinEigen { value, vector, residual, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_eigenvalues() {
        let m = min_eigenvalue(&DMatrix::identity(3, 3), 1e-12).unwrap();
        assert!((m.value - 1.0).abs() < 1e-15);
        assert!((m.vector.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_minimum_is_first_axis() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.5, 0.9]));
        let m = min_eigenvalue(&g, 1e-12).unwrap();
        assert!((m.value - 0.1).abs() < 1e-15);
        assert!((m.vector[0].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn handles_indefinite_and_zero_diagonal() {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let d = jacobi_eigen(&g).unwrap();
        assert!((d.values[0] + 1.0).abs() < 1e-15);
        assert!((d.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn graded_matrix_keeps_relative_accuracy() {
        // D A D with A well conditioned: tiny eigenvalue ~ 1e-20.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-10]));
        let m = &d * &a * &d;
        let dec = jacobi_eigen(&m).unwrap();
        // det = 0.75e-20, large eigenvalue ≈ 1 ⇒ small ≈ 0.75e-20.
        let small = dec.values[0];
        let large = dec.values[1];
        assert!(((small * large) / 0.75e-20 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(jacobi_eigen(&DMatrix::zeros(2, 3)).is_err());
    }
}
