#![allow(dead_code)]

use proptest::prelude::*;
use singcert::jets::{Polynomial, PolynomialMap, Term};
use singcert::spectral::Matrix;

/// All exponent vectors in `n` variables with total degree in `lo..=hi`.
pub fn monomials(n: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut e = vec![0u32; n];
    loop {
        let d: u32 = e.iter().sum();
        if (lo..=hi).contains(&d) {
            out.push(e.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            e[i] += 1;
            if e.iter().sum::<u32>() <= hi {
                break;
            }
            e[i] = 0;
            i += 1;
        }
    }
}

pub fn polynomial(n: usize, exps: &[Vec<u32>], coeffs: &[f64]) -> Polynomial<f64> {
    let terms = exps.iter().zip(coeffs).map(|(e, &c)| Term { coefficient: c, exponents: e.clone() }).collect();
    Polynomial::from_terms(n, terms).unwrap()
}

/// Strategy for a polynomial map `ℝⁿ → ℝᵐ` with terms of degree `lo..=hi`
/// and coefficients in `[-scale, scale]`.
pub fn poly_map(n: usize, m: usize, lo: u32, hi: u32, scale: f64) -> impl Strategy<Value = PolynomialMap<f64>> {
    let exps = monomials(n, lo, hi);
    let count = exps.len() * m;
    prop::collection::vec(-scale..scale, count).prop_map(move |c| {
        let comps = c.chunks(exps.len()).map(|cs| polynomial(n, &exps, cs)).collect();
        PolynomialMap::new(n, comps).unwrap()
    })
}

/// Strategy for an `n×n` matrix with entries in `[-1, 1]`.
pub fn matrix(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |d| Matrix::new(n, n, d).unwrap())
}

pub fn symmetric(n: usize) -> impl Strategy<Value = Matrix<f64>> {
    matrix(n).prop_map(|a| a.add(&a.transpose()).scale(0.5))
}

/// Point strategy in the cube `[-r, r]ⁿ`.
pub fn point(n: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, n)
}
