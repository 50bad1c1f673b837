mod common;

use proptest::prelude::*;
use singcert::spectral::{operator_norm, signature_diagonalize, singular_values, symmetric_eigen, Matrix};

use common::{matrix, symmetric};

fn well_conditioned(a: &Matrix<f64>) -> bool {
    let s = singular_values(a);
    s[s.len() - 1] > 1e-3 * s[0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inverse_has_reciprocal_singular_values(a in (1usize..6).prop_flat_map(matrix)) {
        prop_assume!(well_conditioned(&a));
        let s = singular_values(&a);
        let t = singular_values(&a.inverse().unwrap());
        for (x, y) in s.iter().rev().zip(&t) {
            prop_assert!((1.0 / x - y).abs() <= 1e-10 * y.abs(), "{} vs {}", 1.0 / x, y);
        }
    }

    #[test]
    fn eigenvalues_lie_between_extreme_singular_values(a in (1usize..8).prop_flat_map(symmetric)) {
        let (values, _) = symmetric_eigen(&a);
        let s = singular_values(&a);
        let (top, bottom) = (s[0], s[s.len() - 1]);
        for l in values {
            prop_assert!(l.abs() <= top * (1.0 + 1e-12) + 1e-15);
            prop_assert!(l.abs() >= bottom * (1.0 - 1e-12) - 1e-15);
        }
    }

    #[test]
    fn signature_congruence(a in (1usize..9).prop_flat_map(symmetric)) {
        let f = match signature_diagonalize(&a, None) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        prop_assume!(f.sigma[f.sigma.len() - 1] > 1e-6 * f.sigma[0]);
        let res = f.q0.transpose().matmul(&a).matmul(&f.q0).sub(&f.d0).max_abs();
        prop_assert!(res <= 1e-10 * operator_norm(&a).max(1.0), "residual {res}");
        let n = f.sigma.len();
        let q_norm = operator_norm(&f.q0);
        let qi_norm = operator_norm(&f.q0.inverse().unwrap());
        prop_assert!((q_norm * q_norm * f.sigma[n - 1] - 1.0).abs() <= 1e-10);
        prop_assert!((qi_norm * qi_norm / f.sigma[0] - 1.0).abs() <= 1e-10);
    }
}

