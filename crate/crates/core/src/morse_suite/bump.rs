//! Radial `C^k` bump: `1` on `B_{inner}`, `0` outside `B_{outer}`.

use crate::error::{Error, Result};
use crate::jets::{pointwise_ck_norm, DerivativeTensor, JetOracle, Polynomial, PolynomialMap, Term};
use crate::sampling::sub;

/// `S(w) = w^{m+1} Σ_{j=0}^{m} C(m+j, j)·C(2m+1, m−j)·(−w)^j`, the
/// order-`2m+1` smoothstep, as coefficients of `w⁰ … w^{2m+1}`.
pub fn smoothstep_coefficients(m: usize) -> Vec<f64> {
    let binom = |a: usize, b: usize| -> f64 { (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64) };
    let mut c = vec![0.0; 2 * m + 2];
    for j in 0..=m {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        c[m + 1 + j] = s * binom(m + j, j) * binom(2 * m + 1, m - j);
    }
    c
}

/// `x ↦ G(‖x − center‖²)` where `G` falls from 1 at `inner²` to 0 at
/// `outer²` along a smoothstep of order `2k+1`. Between the radii the
/// bump is a polynomial in `x − center`, so jets are exact.
#[derive(Debug, Clone)]
pub struct Bump {
    center: Vec<f64>,
    inner: f64,
    outer: f64,
    k: usize,
    profile: PolynomialMap<f64>,
}

impl Bump {
    pub fn new(center: Vec<f64>, inner: f64, outer: f64, k: usize) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) || center.is_empty() {
            return Err(Error::InvalidArgument(format!("bump needs 0 < inner < outer, got {inner}, {outer}")));
        }
        let n = center.len();
        let (a, b) = (inner * inner, outer * outer);
        let s = (0..n).fold(Polynomial::zero(n), |acc, i| acc.add(&Polynomial::variable(n, i).pow(2)));
        let w = s.scale(1.0 / (b - a)).add(&Polynomial::constant(n, -a / (b - a)));
        let terms = smoothstep_coefficients(k)
            .into_iter()
            .enumerate()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| Term { coefficient: c, exponents: vec![e as u32] })
            .collect();
        let step = Polynomial::from_terms(1, terms)?;
        let g = Polynomial::constant(n, 1.0).sub(&step.compose(&[w]));
        Ok(Self { center, inner, outer, k, profile: PolynomialMap::new(n, vec![g])? })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.inner, self.outer)
    }

    /// Sampled `C^k` norm along a ray; the Frobenius norms of the
    /// derivatives of a radial function depend only on the radius.
    pub fn ck_norm(&self, samples: usize) -> Result<f64> {
        let mut best: f64 = 0.0;
        for i in 0..=samples {
            let t = self.inner + (self.outer - self.inner) * i as f64 / samples as f64;
            let mut x = self.center.clone();
            x[0] += t;
            best = best.max(pointwise_ck_norm(self, &x, self.k)?);
        }
        Ok(best)
    }
}

impl JetOracle<f64> for Bump {
    fn dims_in(&self) -> usize {
        self.center.len()
    }
    fn dims_out(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.k
    }
    fn eval(&self, point: &[f64], order: usize) -> Result<DerivativeTensor<f64>> {
        crate::jets::check_query(self, point, order)?;
        let u = sub(point, &self.center);
        let s: f64 = u.iter().map(|v| v * v).sum();
        let n = self.center.len();
        if s <= self.inner * self.inner || s >= self.outer * self.outer {
            let mut t = DerivativeTensor::zeros(1, n, order);
            if order == 0 && s <= self.inner * self.inner {
                t.data[0] = 1.0;
            }
            return Ok(t);
        }
        self.profile.eval(&u, order)
    }
}

/// `Σ cᵢ·bump(x − xᵢ)` for bumps of a common shape with disjoint supports.
#[derive(Debug, Clone)]
pub struct BumpSum {
    n: usize,
    bumps: Vec<(Bump, f64)>,
    k: usize,
}

impl BumpSum {
    pub fn new(n: usize, k: usize, bumps: Vec<(Bump, f64)>) -> Self {
        Self { n, bumps, k }
    }
}

impl JetOracle<f64> for BumpSum {
    fn dims_in(&self) -> usize {
        self.n
    }
    fn dims_out(&self) -> usize {
        1
    }
    fn max_order(&self) -> usize {
        self.k
    }
    fn eval(&self, point: &[f64], order: usize) -> Result<DerivativeTensor<f64>> {
        crate::jets::check_query(self, point, order)?;
        let mut t = DerivativeTensor::zeros(1, self.n, order);
        for (b, c) in &self.bumps {
            if *c == 0.0 || crate::sampling::dist(point, b.center()) >= b.outer {
                continue;
            }
            let d = b.eval(point, order)?;
            t.data.iter_mut().zip(&d.data).for_each(|(a, v)| *a += c * v);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smoothstep_endpoints() {
        for m in 1..5 {
            let c = smoothstep_coefficients(m);
            let at = |w: f64| c.iter().rev().fold(0.0, |acc, v| acc * w + v);
            assert_abs_diff_eq!(at(0.0), 0.0);
            assert_abs_diff_eq!(at(1.0), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(at(0.5), 0.5, epsilon = 1e-12);
        }
        assert_eq!(smoothstep_coefficients(1), vec![0.0, 0.0, 3.0, -2.0]);
    }

    #[test]
    fn plateau_and_support() {
        let b = Bump::new(vec![0.2, 0.0], 0.1, 0.2, 3).unwrap();
        assert_eq!(b.value(&[0.25, 0.0]).unwrap()[0], 1.0);
        assert_eq!(b.value(&[0.2, 0.3]).unwrap()[0], 0.0);
        let mid = b.value(&[0.35, 0.0]).unwrap()[0];
        assert!(mid > 0.0 && mid < 1.0);
        // C^k matching across both radii
        for r in [0.1, 0.2] {
            for order in 1..=3 {
                let lo = b.eval(&[0.2 + r - 1e-12, 0.0], order).unwrap().frobenius_norm();
                let hi = b.eval(&[0.2 + r + 1e-12, 0.0], order).unwrap().frobenius_norm();
                assert!((lo - hi).abs() < 1e-3 * (1.0 + lo), "order {order} at {r}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn norm_scales_with_width() {
        let wide = Bump::new(vec![0.0], 0.2, 0.4, 3).unwrap().ck_norm(400).unwrap();
        let narrow = Bump::new(vec![0.0], 0.1, 0.2, 3).unwrap().ck_norm(400).unwrap();
        assert!(narrow > 4.0 * wide);
    }
}
