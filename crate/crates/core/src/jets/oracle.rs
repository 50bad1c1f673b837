use super::polynomial::PolynomialMap;
use super::tensor::{unflatten, DerivativeTensor};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::spectral::Matrix;

/// A map `ℝⁿ → ℝᵐ` that can be queried for its derivative tensors.
pub trait JetOracle<T: Scalar>: Send + Sync {
    fn dims_in(&self) -> usize;
    fn dims_out(&self) -> usize;
    /// Highest derivative order `eval` answers.
    fn max_order(&self) -> usize;
    /// `Dᵖ f(point)`; order 0 is the value.
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>>;

    fn value(&self, point: &[T]) -> Result<Vec<T>> {
        Ok(self.eval(point, 0)?.data)
    }

    fn jacobian(&self, point: &[T]) -> Result<Matrix<T>> {
        Ok(self.eval(point, 1)?.to_matrix())
    }

    /// Hessian of output component `component`.
    fn hessian(&self, point: &[T], component: usize) -> Result<Matrix<T>> {
        Ok(self.eval(point, 2)?.hessian(component))
    }

    /// Gradient of a scalar-valued oracle.
    fn gradient(&self, point: &[T]) -> Result<Vec<T>> {
        Ok(self.eval(point, 1)?.data)
    }
}

pub(crate) fn check_query<T: Scalar, O: JetOracle<T> + ?Sized>(o: &O, point: &[T], order: usize) -> Result<()> {
    if point.len() != o.dims_in() {
        return Err(Error::DimensionMismatch { expected: o.dims_in(), found: point.len() });
    }
    if order > o.max_order() {
        return Err(Error::OrderTooHigh { requested: order, max: o.max_order() });
    }
    Ok(())
}

/// Polynomial maps answer every order exactly.
impl<T: Scalar> JetOracle<T> for PolynomialMap<T> {
    fn dims_in(&self) -> usize {
        PolynomialMap::dims_in(self)
    }
    fn dims_out(&self) -> usize {
        PolynomialMap::dims_out(self)
    }
    fn max_order(&self) -> usize {
        usize::MAX
    }
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>> {
        check_query(self, point, order)?;
        if order == 0 {
            return Ok(DerivativeTensor { dims_out: self.dims_out(), dims_in: self.dims_in(), order: 0, data: self.evaluate(point) });
        }
        Ok(self.derivative(point, order))
    }
}

impl<T: Scalar, O: JetOracle<T> + ?Sized> JetOracle<T> for &O {
    fn dims_in(&self) -> usize {
        (**self).dims_in()
    }
    fn dims_out(&self) -> usize {
        (**self).dims_out()
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>> {
        (**self).eval(point, order)
    }
}

impl<T: Scalar, O: JetOracle<T> + ?Sized> JetOracle<T> for Box<O> {
    fn dims_in(&self) -> usize {
        (**self).dims_in()
    }
    fn dims_out(&self) -> usize {
        (**self).dims_out()
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>> {
        (**self).eval(point, order)
    }
}

/// Central finite differences of a black-box map.
///
/// The step for order `p` is `ε^{1/(p+2)}·max(1, |xᵢ|)`; for `p = 1` this is
/// the usual cube root of machine epsilon. Accuracy degrades with order, so
/// treat orders ≥ 3 as rough.
pub struct FiniteDifferenceOracle<F> {
    f: F,
    n: usize,
    m: usize,
    max_order: usize,
    max_step: f64,
}

impl<F> FiniteDifferenceOracle<F> {
    pub fn new(n: usize, m: usize, max_order: usize, f: F) -> Self {
        Self { f, n, m, max_order, max_step: f64::INFINITY }
    }

    /// Caps every step at `h`. An order-`p` stencil then stays within
    /// `p·h` of the query point, which matters when `f` is only defined on
    /// a small ball.
    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

fn nested_diff<T: Scalar, F: Fn(&[T]) -> Result<Vec<T>>>(f: &F, x: &mut Vec<T>, idx: &[usize], h: &[T]) -> Result<Vec<T>> {
    match idx.split_last() {
        None => f(x),
        Some((&j, rest)) => {
            let x0 = x[j];
            x[j] = x0 + h[j];
            let plus = nested_diff(f, x, rest, h)?;
            x[j] = x0 - h[j];
            let minus = nested_diff(f, x, rest, h)?;
            x[j] = x0;
            let two_h = h[j] + h[j];
            Ok(plus.iter().zip(&minus).map(|(&a, &b)| (a - b) / two_h).collect())
        }
    }
}

impl<T, F> JetOracle<T> for FiniteDifferenceOracle<F>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<Vec<T>> + Send + Sync,
{
    fn dims_in(&self) -> usize {
        self.n
    }
    fn dims_out(&self) -> usize {
        self.m
    }
    fn max_order(&self) -> usize {
        self.max_order
    }
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>> {
        check_query(self, point, order)?;
        let mut t = DerivativeTensor::zeros(self.m, self.n, order);
        if order == 0 {
            let v = (self.f)(point)?;
            if v.len() != self.m {
                return Err(Error::DimensionMismatch { expected: self.m, found: v.len() });
            }
            t.data = v;
            return Ok(t);
        }
        let base = T::eps().powf(T::one() / lit::<T>(order as f64 + 2.0));
        let cap = lit::<T>(self.max_step);
        let h: Vec<T> = point.iter().map(|&xi| (base * xi.abs().max(T::one())).min(cap)).collect();
        let mut x = point.to_vec();
        let block = t.block_len();
        let mut idx = vec![0usize; order];
        for flat in 0..block {
            unflatten(flat, self.n, &mut idx);
            if idx.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            let d = nested_diff(&self.f, &mut x, &idx, &h)?;
            for (c, &v) in d.iter().enumerate() {
                t.data[c * block + flat] = v;
            }
        }
        // mirror sorted tuples to all permutations
        let mut sorted = vec![0usize; order];
        for flat in 0..block {
            unflatten(flat, self.n, &mut idx);
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            if sorted != idx {
                for c in 0..self.m {
                    let v = t.get(c, &sorted);
                    t.set(c, &idx, v);
                }
            }
        }
        Ok(t)
    }
}

/// `z ↦ W·f(base + V z)`: affine change of input variables and a linear
/// change of output variables. Permutations and rotations are the main use.
pub struct Reparametrized<O> {
    inner: O,
    base: Vec<f64>,
    v: Matrix<f64>,
    w: Matrix<f64>,
}

impl<O: JetOracle<f64>> Reparametrized<O> {
    pub fn new(inner: O, base: Vec<f64>, v: Matrix<f64>, w: Matrix<f64>) -> Result<Self> {
        if base.len() != inner.dims_in() || v.rows() != inner.dims_in() {
            return Err(Error::DimensionMismatch { expected: inner.dims_in(), found: v.rows() });
        }
        if w.cols() != inner.dims_out() {
            return Err(Error::DimensionMismatch { expected: inner.dims_out(), found: w.cols() });
        }
        Ok(Self { inner, base, v, w })
    }

    /// Maps new coordinates `z` back to the inner oracle's input.
    pub fn to_inner(&self, z: &[f64]) -> Vec<f64> {
        let vz = self.v.mul_vec(z);
        self.base.iter().zip(vz).map(|(a, b)| a + b).collect()
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: JetOracle<f64>> JetOracle<f64> for Reparametrized<O> {
    fn dims_in(&self) -> usize {
        self.v.cols()
    }
    fn dims_out(&self) -> usize {
        self.w.rows()
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
    fn eval(&self, point: &[f64], order: usize) -> Result<DerivativeTensor<f64>> {
        check_query(self, point, order)?;
        let x = self.to_inner(point);
        let t = self.inner.eval(&x, order)?;
        Ok(t.reparametrize(&self.v, &self.w))
    }
}

/// Sum of two oracles with the same shape.
pub struct SumOracle<A, B> {
    pub a: A,
    pub b: B,
}

impl<T: Scalar, A: JetOracle<T>, B: JetOracle<T>> JetOracle<T> for SumOracle<A, B> {
    fn dims_in(&self) -> usize {
        self.a.dims_in()
    }
    fn dims_out(&self) -> usize {
        self.a.dims_out()
    }
    fn max_order(&self) -> usize {
        self.a.max_order().min(self.b.max_order())
    }
    fn eval(&self, point: &[T], order: usize) -> Result<DerivativeTensor<T>> {
        let mut t = self.a.eval(point, order)?;
        let u = self.b.eval(point, order)?;
        if u.data.len() != t.data.len() {
            return Err(Error::DimensionMismatch { expected: t.data.len(), found: u.data.len() });
        }
        t.data.iter_mut().zip(&u.data).for_each(|(x, &y)| *x += y);
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse_polynomial_map;

    #[test]
    fn order_zero_is_value() {
        let p = parse_polynomial_map::<f64>("x1*x2 + 1; x2", 2).unwrap();
        assert_eq!(p.value(&[2.0, 3.0]).unwrap(), vec![7.0, 3.0]);
        assert!(matches!(p.eval(&[1.0], 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn finite_differences_track_polynomial() {
        let p = parse_polynomial_map::<f64>("x1^3*x2 - 2*x2^2", 2).unwrap();
        let q = p.clone();
        let fd = FiniteDifferenceOracle::new(2, 1, 2, move |x: &[f64]| Ok(q.evaluate(x)));
        let x = [0.4, -0.7];
        let exact = p.derivative(&x, 1);
        let approx = fd.eval(&x, 1).unwrap();
        for (a, b) in exact.data.iter().zip(&approx.data) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let h_exact = p.derivative(&x, 2);
        let h_fd = fd.eval(&x, 2).unwrap();
        for (a, b) in h_exact.data.iter().zip(&h_fd.data) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        assert!(fd.eval(&x, 3).is_err());
    }

    #[test]
    fn capped_step_stays_near_the_point() {
        let fd = FiniteDifferenceOracle::new(1, 1, 2, |x: &[f64]| {
            if x[0].abs() > 2e-6 {
                return Err(Error::Oracle("outside".into()));
            }
            Ok(vec![x[0] * x[0]])
        });
        assert!(fd.eval(&[0.0], 1).is_err());
        let fd = fd.with_max_step(1e-6);
        let d2 = fd.eval(&[0.0], 2).unwrap().data[0];
        assert!((d2 - 2.0).abs() < 1e-3, "{d2}");
    }

    #[test]
    fn reparametrized_matches_composition() {
        let p = parse_polynomial_map::<f64>("x1^2*x2 + x2^3", 2).unwrap();
        let v = Matrix::from_rows(&[[0.6, -0.8], [0.8, 0.6]]);
        let base = vec![0.1, 0.2];
        let r = Reparametrized::new(p.clone(), base.clone(), v.clone(), Matrix::identity(1)).unwrap();
        // exact composition as a polynomial
        let inner = parse_polynomial_map::<f64>("0.1 + 0.6*x1 - 0.8*x2; 0.2 + 0.8*x1 + 0.6*x2", 2).unwrap();
        let c = p.compose(&inner);
        let z = [0.3, -0.4];
        for order in 0..=3 {
            let a = r.eval(&z, order).unwrap();
            let b = JetOracle::eval(&c, &z, order).unwrap();
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }
}
