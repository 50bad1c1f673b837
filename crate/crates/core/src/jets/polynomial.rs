use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::tensor::{unflatten, DerivativeTensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One monomial `coefficient · x^exponents`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    pub coefficient: T,
    pub exponents: Vec<u32>,
}

/// Multivariate polynomial in `n` variables. Terms are kept merged, nonzero
/// and sorted by exponent (graded, then lexicographic).
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    n: usize,
    terms: Vec<Term<T>>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self::from_terms(n, vec![Term { coefficient: c, exponents: vec![0; n] }])
            .expect("well-formed constant")
    }

    pub fn variable(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut e = vec![0; n];
        e[i] = 1;
        Self { n, terms: vec![Term { coefficient: T::one(), exponents: e }] }
    }

    /// Merges duplicate exponents and drops zero coefficients.
    pub fn from_terms(n: usize, terms: Vec<Term<T>>) -> Result<Self> {
        let mut acc: BTreeMap<(u32, Vec<u32>), T> = BTreeMap::new();
        for t in terms {
            if t.exponents.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: t.exponents.len() });
            }
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidArgument("non-finite coefficient".into()));
            }
            let deg = t.exponents.iter().sum();
            *acc.entry((deg, t.exponents)).or_insert_with(T::zero) += t.coefficient;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != T::zero())
            .map(|((_, exponents), coefficient)| Term { coefficient, exponents })
            .collect();
        Ok(Self { n, terms })
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exponents.iter().sum()).max().unwrap_or(0)
    }

    /// The value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<T> {
        match self.terms.as_slice() {
            [] => Some(T::zero()),
            [t] if t.exponents.iter().all(|&e| e == 0) => Some(t.coefficient),
            _ => None,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Self::from_terms(self.n, terms).expect("same dims")
    }

    pub fn neg(&self) -> Self {
        self.scale(-T::one())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn scale(&self, s: T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term { coefficient: t.coefficient * s, exponents: t.exponents.clone() })
            .collect();
        Self::from_terms(self.n, terms).expect("same dims")
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let exponents = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                terms.push(Term { coefficient: a.coefficient * b.coefficient, exponents });
            }
        }
        Self::from_terms(self.n, terms).expect("same dims")
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.n, T::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Symbolic `∂/∂x_i`.
    pub fn partial(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[i] > 0)
            .map(|t| {
                let mut e = t.exponents.clone();
                let k = e[i];
                e[i] -= 1;
                Term { coefficient: t.coefficient * T::from_u32(k).unwrap(), exponents: e }
            })
            .collect();
        Self::from_terms(self.n, terms).expect("same dims")
    }

    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.n);
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(x)
                    .fold(t.coefficient, |acc, (&e, &xi)| if e == 0 { acc } else { acc * xi.powi(e as i32) })
            })
            .sum()
    }

    /// `∂^α p(x)` for a multi-index `α` given as per-variable counts.
    pub fn eval_partial(&self, alpha: &[u32], x: &[T]) -> T {
        let mut sum = T::zero();
        'terms: for t in &self.terms {
            let mut v = t.coefficient;
            for ((&e, &a), &xi) in t.exponents.iter().zip(alpha).zip(x) {
                if a > e {
                    continue 'terms;
                }
                for f in (e - a + 1)..=e {
                    v *= T::from_u32(f).unwrap();
                }
                let rem = e - a;
                if rem > 0 {
                    v *= xi.powi(rem as i32);
                }
            }
            sum += v;
        }
        sum
    }

    /// Substitutes `x_i ← inner[i]`; `inner` polynomials share a common
    /// variable count which becomes the result's.
    pub fn compose(&self, inner: &[Polynomial<T>]) -> Self {
        assert_eq!(inner.len(), self.n);
        let m = inner.first().map_or(0, |p| p.n);
        let mut acc = Self::zero(m);
        for t in &self.terms {
            let mut prod = Self::constant(m, t.coefficient);
            for (i, &e) in t.exponents.iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&inner[i].pow(e));
                }
            }
            acc = acc.add(&prod);
        }
        acc
    }
}

/// A polynomial map `ℝⁿ → ℝᵐ`, one polynomial per output coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomialMap<T>", into = "RawPolynomialMap<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PolynomialMap<T: Scalar> {
    n: usize,
    components: Vec<Polynomial<T>>,
}

#[derive(Serialize, Deserialize)]
struct RawPolynomialMap<T> {
    dims_in: usize,
    components: Vec<Vec<Term<T>>>,
}

impl<T: Scalar> TryFrom<RawPolynomialMap<T>> for PolynomialMap<T> {
    type Error = Error;
    fn try_from(raw: RawPolynomialMap<T>) -> Result<Self> {
        let components = raw
            .components
            .into_iter()
            .map(|terms| Polynomial::from_terms(raw.dims_in, terms))
            .collect::<Result<Vec<_>>>()?;
        PolynomialMap::new(raw.dims_in, components)
    }
}

impl<T: Scalar> From<PolynomialMap<T>> for RawPolynomialMap<T> {
    fn from(p: PolynomialMap<T>) -> Self {
        RawPolynomialMap {
            dims_in: p.n,
            components: p.components.into_iter().map(|c| c.terms).collect(),
        }
    }
}

impl<T: Scalar> PolynomialMap<T> {
    pub fn new(n: usize, components: Vec<Polynomial<T>>) -> Result<Self> {
        if n == 0 || components.is_empty() {
            return Err(Error::InvalidArgument("polynomial map needs n ≥ 1 and m ≥ 1".into()));
        }
        if let Some(bad) = components.iter().find(|c| c.n != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.n });
        }
        Ok(Self { n, components })
    }

    pub fn dims_in(&self) -> usize {
        self.n
    }

    pub fn dims_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<T>] {
        &self.components
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(|c| c.degree()).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[T]) -> Vec<T> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolynomialMap<T>) -> PolynomialMap<T> {
        assert_eq!(inner.dims_out(), self.n);
        let comps = self.components.iter().map(|c| c.compose(&inner.components)).collect();
        PolynomialMap { n: inner.n, components: comps }
    }

    /// The order-`p` derivative tensor at `x`, filled over sorted index
    /// tuples and mirrored to every permutation.
    pub fn derivative(&self, x: &[T], p: usize) -> DerivativeTensor<T> {
        let n = self.n;
        let mut t = DerivativeTensor::zeros(self.dims_out(), n, p);
        if p as u32 > self.degree() {
            return t;
        }
        let block = t.block_len();
        let mut idx = vec![0usize; p];
        let mut alpha = vec![0u32; n];
        let mut cache: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for flat in 0..block {
            unflatten(flat, n, &mut idx);
            alpha.iter_mut().for_each(|a| *a = 0);
            for &j in &idx {
                alpha[j] += 1;
            }
            if let Some(&first) = cache.get(&alpha) {
                for c in 0..self.dims_out() {
                    t.data[c * block + flat] = t.data[c * block + first];
                }
                continue;
            }
            for (c, comp) in self.components.iter().enumerate() {
                t.data[c * block + flat] = comp.eval_partial(&alpha, x);
            }
            cache.insert(alpha.clone(), flat);
        }
        t
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let neg = t.coefficient < T::zero();
            let mag = t.coefficient.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = t
                .exponents
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == T::one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for PolynomialMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: f64, e: &[u32]) -> Term<f64> {
        Term { coefficient: c, exponents: e.to_vec() }
    }

    #[test]
    fn merges_and_drops_zeros() {
        let p = Polynomial::from_terms(2, vec![t(1.0, &[1, 0]), t(2.0, &[1, 0]), t(0.0, &[0, 1]), t(1.0, &[0, 2]), t(-1.0, &[0, 2])])
            .unwrap();
        assert_eq!(p.terms(), &[t(3.0, &[1, 0])]);
    }

    #[test]
    fn derivatives_above_degree_vanish() {
        let x = Polynomial::variable(2, 0);
        let map = PolynomialMap::new(2, vec![x.pow(2)]).unwrap();
        let d3 = map.derivative(&[0.3, 0.7], 3);
        assert!(d3.data.iter().all(|&v| v == 0.0));
        let d2 = map.derivative(&[0.3, 0.7], 2);
        assert_eq!(d2.get(0, &[0, 0]), 2.0);
    }

    #[test]
    fn compose_substitutes() {
        // (x1 + x2)^2 with x1 = y, x2 = y
        let n = 2;
        let s = Polynomial::variable(n, 0).add(&Polynomial::variable(n, 1)).pow(2);
        let outer = PolynomialMap::new(2, vec![s]).unwrap();
        let y = Polynomial::<f64>::variable(1, 0);
        let inner = PolynomialMap::new(1, vec![y.clone(), y]).unwrap();
        let c = outer.compose(&inner);
        assert_eq!(c.components()[0].terms(), &[Term { coefficient: 4.0, exponents: vec![2] }]);
    }

    #[test]
    fn display_is_readable() {
        let p = Polynomial::from_terms(2, vec![t(2.0, &[1, 1]), t(-1.0, &[3, 0]), t(-0.5, &[0, 0])]).unwrap();
        assert_eq!(p.to_string(), "-0.5 + 2*x1*x2 - x1^3");
    }

    #[test]
    fn json_rejects_bad_dims() {
        let bad = r#"{"dims_in":2,"components":[[{"coefficient":1.0,"exponents":[1]}]]}"#;
        assert!(serde_json::from_str::<PolynomialMap<f64>>(bad).is_err());
    }
}
