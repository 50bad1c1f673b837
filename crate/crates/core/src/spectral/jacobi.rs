//! Cyclic Jacobi rotations: symmetric eigendecomposition and one-sided
//! (Hestenes) singular values. Intended for the small dense matrices this
//! crate works with, n up to a few dozen.

use super::matrix::Matrix;
use crate::scalar::{from_usize, Scalar};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(values) V^T` of a symmetric matrix, values
/// in nonincreasing order and the matching eigenvectors as columns of `V`.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    if scale == T::zero() {
        return (vec![T::zero(); n], v);
    }

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= T::eps() * scale * crate::scalar::lit(1e-2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Singular values in nonincreasing order, `min(rows, cols)` of them.
pub fn one_sided_singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    // Work on the orientation with at least as many rows as columns.
    let work = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (m, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| work.column(j)).collect();
    let tol = T::eps() * from_usize::<T>(m);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: T = cols[p].iter().map(|&x| x * x).sum();
                let beta: T = cols[q].iter().map(|&x| x * x).sum();
                let gamma: T = cols[p].iter().zip(&cols[q]).map(|(&x, &y)| x * y).sum();
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let xp = *x;
                    let xq = *y;
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<T> = cols.iter().map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_2x2() {
        let a = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let recon = vecs.matmul(&Matrix::from_diag(&vals)).matmul(&vecs.transpose());
        assert!(recon.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_input_needs_no_rotation() {
        let a = Matrix::<f64>::from_diag(&[1.0, -5.0, 3.0]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert_eq!(vals, vec![3.0, 1.0, -5.0]);
        // pure permutation
        assert!(vecs.data().iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn wide_matrix_singular_values() {
        let a = Matrix::<f64>::from_rows(&[[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]]);
        assert_eq!(one_sided_singular_values(&a), vec![4.0, 3.0]);
    }
}
