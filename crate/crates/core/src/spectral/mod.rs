//! Small dense linear algebra: singular values, operator norms, distance to
//! the singular locus and signature diagonalization of symmetric matrices.

mod jacobi;
mod matrix;

pub use jacobi::symmetric_eigen;
pub use matrix::Matrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Singular values `σ₁ ≥ … ≥ σ_min(m,n) ≥ 0`.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    jacobi::one_sided_singular_values(a)
}

/// Operator 2-norm, i.e. the largest singular value.
pub fn operator_norm<T: Scalar>(a: &Matrix<T>) -> T {
    singular_values(a).first().copied().unwrap_or_else(T::zero)
}

/// Smallest singular value of a square matrix. By Eckart–Young this is the
/// distance (in operator norm) to the nearest singular matrix, and equals
/// `1/‖A⁻¹‖` when `A` is invertible.
pub fn distance_to_singular<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    Ok(*singular_values(a).last().expect("nonempty"))
}

/// Number of singular values above `rel_tol * σ₁`.
pub fn numerical_rank<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> usize {
    let sv = singular_values(a);
    let top = sv.first().copied().unwrap_or_else(T::zero);
    if top == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Congruence `Q0ᵀ A Q0 = D0` of a nondegenerate symmetric matrix to a
/// diagonal of signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureFactorization<T> {
    #[serde(rename = "Q0")]
    pub q0: Matrix<T>,
    #[serde(rename = "D0")]
    pub d0: Matrix<T>,
    pub sigma: Vec<T>,
}

impl<T: Scalar> SignatureFactorization<T> {
    /// Diagonal of `D0` as ±1 values, positive entries first.
    pub fn signs(&self) -> Vec<T> {
        self.d0.diagonal()
    }

    pub fn negative_count(&self) -> usize {
        self.signs().iter().filter(|&&s| s < T::zero()).count()
    }
}

/// Default `NearSingular` threshold for [`signature_diagonalize`]: `1e-12·‖A‖`.
pub fn default_signature_tol<T: Scalar>(a: &Matrix<T>) -> T {
    lit::<T>(1e-12) * operator_norm(a)
}

/// Builds `Q0 = U·|Λ|^{-1/2}` from `A = U Λ Uᵀ`, so that `Q0ᵀ A Q0 = sign(Λ)`,
/// `‖Q0‖² = 1/σ_n` and `‖Q0⁻¹‖² = σ₁`.
pub fn signature_diagonalize<T: Scalar>(
    a: &Matrix<T>,
    tol: Option<T>,
) -> Result<SignatureFactorization<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    let norm = a.max_abs();
    if a.symmetry_defect() > lit::<T>(1e-12) * norm.max(T::one()) {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let tol = tol.unwrap_or_else(|| default_signature_tol(a));
    let (values, u) = symmetric_eigen(a);
    let sigma_min = values.iter().fold(T::infinity(), |m, v| m.min(v.abs()));
    if !(sigma_min > tol) {
        return Err(Error::NearSingular {
            sigma: sigma_min.to_f64().unwrap_or(0.0),
            tol: tol.to_f64().unwrap_or(0.0),
        });
    }
    let n = a.rows();
    let q0 = Matrix::from_fn(n, n, |i, j| u[(i, j)] / values[j].abs().sqrt());
    let signs: Vec<T> = values.iter().map(|v| v.signum()).collect();
    let mut sigma: Vec<T> = values.iter().map(|v| v.abs()).collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SignatureFactorization { q0, d0: Matrix::from_diag(&signs), sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_singular_values() {
        assert_eq!(singular_values(&Matrix::<f64>::identity(3)), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_singular_values_are_sorted_magnitudes() {
        let sv = singular_values(&Matrix::<f64>::from_diag(&[3.0, -4.0]));
        assert_relative_eq!(sv[0], 4.0, epsilon = 1e-15);
        assert_relative_eq!(sv[1], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn shear_singular_values_are_golden_ratio() {
        // eigenvalues of AᵀA = [[1,1],[1,2]] are (3 ± √5)/2
        let sv = singular_values(&Matrix::<f64>::from_rows(&[[1.0, 1.0], [0.0, 1.0]]));
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(sv[0], phi, max_relative = 1e-14);
        assert_relative_eq!(sv[1], 1.0 / phi, max_relative = 1e-14);
    }

    #[test]
    fn distance_to_singular_examples() {
        assert_relative_eq!(distance_to_singular(&Matrix::<f64>::identity(2)).unwrap(), 1.0);
        assert_relative_eq!(
            distance_to_singular(&Matrix::<f64>::from_diag(&[2.0, 0.1])).unwrap(),
            0.1,
            max_relative = 1e-15
        );
        assert!(distance_to_singular(&Matrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn signature_of_diagonal() {
        let f = signature_diagonalize(&Matrix::<f64>::from_diag(&[4.0, -9.0]), None).unwrap();
        assert_relative_eq!(f.q0[(0, 0)].abs(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(f.q0[(1, 1)].abs(), 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(f.signs(), vec![1.0, -1.0]);
    }

    #[test]
    fn signature_of_two_by_two() {
        let a = Matrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let f = signature_diagonalize(&a, None).unwrap();
        let r = f.q0.transpose().matmul(&a).matmul(&f.q0).sub(&f.d0);
        assert!(r.max_abs() < 1e-12);
        assert_eq!(f.signs(), vec![1.0, 1.0]);
        assert_relative_eq!(operator_norm(&f.q0).powi(2), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn signature_refuses_near_singular() {
        let a = Matrix::<f64>::from_diag(&[1.0, 1e-14]);
        assert!(matches!(signature_diagonalize(&a, None), Err(Error::NearSingular { .. })));
        let b = Matrix::<f64>::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(signature_diagonalize(&b, None), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let sv = singular_values(&Matrix::<f32>::from_rows(&[[1.0, 1.0], [0.0, 1.0]]));
        assert!((sv[0] - 1.618034).abs() < 1e-5);
    }
}
