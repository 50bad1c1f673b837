use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::spectral::Matrix;

/// `D^p f(x)` for `f: ℝⁿ → ℝᵐ`, stored as an `m × nᵖ` row-major array.
///
/// Entry `(c; j₁…j_p)` is `∂ᵖ f_c / ∂x_{j₁}…∂x_{j_p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTensor<T> {
    pub dims_out: usize,
    pub dims_in: usize,
    pub order: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> DerivativeTensor<T> {
    pub fn zeros(dims_out: usize, dims_in: usize, order: usize) -> Self {
        let len = dims_out * dims_in.pow(order as u32);
        Self { dims_out, dims_in, order, data: vec![T::zero(); len] }
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        self.dims_in.pow(self.order as u32)
    }

    pub fn flat_index(&self, component: usize, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        let mut off = 0;
        for &j in idx {
            off = off * self.dims_in + j;
        }
        component * self.block_len() + off
    }

    pub fn get(&self, component: usize, idx: &[usize]) -> T {
        self.data[self.flat_index(component, idx)]
    }

    pub fn set(&mut self, component: usize, idx: &[usize], v: T) {
        let i = self.flat_index(component, idx);
        self.data[i] = v;
    }

    /// Slice for one output component.
    pub fn component(&self, c: usize) -> &[T] {
        let b = self.block_len();
        &self.data[c * b..(c + 1) * b]
    }

    /// Frobenius norm, an upper bound on the multilinear operator norm.
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Order-0 tensor as a vector.
    pub fn to_vector(&self) -> Vec<T> {
        assert_eq!(self.order, 0);
        self.data.clone()
    }

    /// Order-1 tensor as the `m × n` Jacobian matrix.
    pub fn to_matrix(&self) -> Matrix<T> {
        assert_eq!(self.order, 1);
        Matrix::from_fn(self.dims_out, self.dims_in, |i, j| self.data[i * self.dims_in + j])
    }

    /// Order-2 tensor restricted to one output component, as an `n × n` matrix.
    pub fn hessian(&self, component: usize) -> Matrix<T> {
        assert_eq!(self.order, 2);
        let n = self.dims_in;
        let block = self.component(component);
        Matrix::from_fn(n, n, |i, j| block[i * n + j])
    }

    /// Largest difference between an entry and the entry with swapped
    /// adjacent indices; zero for an exactly symmetric tensor.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        let mut idx = vec![0usize; self.order];
        for c in 0..self.dims_out {
            for flat in 0..self.block_len() {
                unflatten(flat, self.dims_in, &mut idx);
                let v = self.get(c, &idx);
                for a in 0..self.order.saturating_sub(1) {
                    idx.swap(a, a + 1);
                    worst = worst.max((self.get(c, &idx) - v).abs());
                    idx.swap(a, a + 1);
                }
            }
        }
        worst
    }

    /// Tensor of `z ↦ W·f(x₀ + V z)`: every differentiation slot is
    /// contracted with `V` (`n_old × n_new`) and the output slot with `W`
    /// (`m_new × m_old`).
    pub fn reparametrize(&self, v: &Matrix<T>, w: &Matrix<T>) -> Self {
        assert_eq!(v.rows(), self.dims_in);
        assert_eq!(w.cols(), self.dims_out);
        let mut cur = self.data.clone();
        let mut n_cur_dims = vec![self.dims_in; self.order];
        let n_new = v.cols();
        // contract slot by slot
        for slot in 0..self.order {
            let before: usize = n_cur_dims[..slot].iter().product();
            let after: usize = n_cur_dims[slot + 1..].iter().product();
            let n_old = n_cur_dims[slot];
            let mut next = vec![T::zero(); self.dims_out * before * n_new * after];
            for c in 0..self.dims_out {
                for b in 0..before {
                    for i in 0..n_old {
                        let src = ((c * before + b) * n_old + i) * after;
                        for j in 0..n_new {
                            let vij = v[(i, j)];
                            if vij == T::zero() {
                                continue;
                            }
                            let dst = ((c * before + b) * n_new + j) * after;
                            for a in 0..after {
                                next[dst + a] += cur[src + a] * vij;
                            }
                        }
                    }
                }
            }
            cur = next;
            n_cur_dims[slot] = n_new;
        }
        let block: usize = n_new.pow(self.order as u32);
        let m_new = w.rows();
        let mut out = vec![T::zero(); m_new * block];
        for r in 0..m_new {
            for c in 0..self.dims_out {
                let wrc = w[(r, c)];
                if wrc == T::zero() {
                    continue;
                }
                for k in 0..block {
                    out[r * block + k] += wrc * cur[c * block + k];
                }
            }
        }
        Self { dims_out: m_new, dims_in: n_new, order: self.order, data: out }
    }
}

/// Writes the base-`n` digits of `flat` into `idx` (most significant first).
pub(crate) fn unflatten(mut flat: usize, n: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % n;
        flat /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparametrize_permutes_indices() {
        // Hessian of a single component with a known asymmetric layout under swap
        let mut t = DerivativeTensor::<f64>::zeros(1, 2, 2);
        t.set(0, &[0, 0], 1.0);
        t.set(0, &[0, 1], 2.0);
        t.set(0, &[1, 0], 2.0);
        t.set(0, &[1, 1], 3.0);
        let swap = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let r = t.reparametrize(&swap, &Matrix::identity(1));
        assert_eq!(r.get(0, &[0, 0]), 3.0);
        assert_eq!(r.get(0, &[1, 1]), 1.0);
        assert_eq!(r.get(0, &[0, 1]), 2.0);
    }

    #[test]
    fn reparametrize_scales_by_powers() {
        let mut t = DerivativeTensor::<f64>::zeros(1, 1, 3);
        t.data[0] = 6.0;
        let r = t.reparametrize(&Matrix::from_diag(&[2.0]), &Matrix::from_diag(&[0.5]));
        assert_eq!(r.data[0], 6.0 * 8.0 * 0.5);
    }
}
