//! Triangular diagonalization `B̄(x) = Qᵀ(x)·D₀·Q(x)` of symmetric matrix
//! families with `B̄(0) = D₀ = diag(±1)`.

use num_traits::Num;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{FiniteDifferenceOracle, JetOracle};
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling;
use crate::scalar::{ring_int, ring_pow};
use crate::spectral::Matrix;

/// `δ = 1/(4(K̄+1)(K̄+2)(1+(K̄+2)²)·n(n+1))`.
pub fn diag_delta<T: Num + PartialOrd + Clone>(kbar: T, n: u64) -> T {
    let one = T::one();
    let k1 = kbar.clone() + one.clone();
    let k2 = kbar + ring_int::<T>(2);
    let denom = ring_int::<T>(4) * k1 * k2.clone() * (one.clone() + ring_pow(&k2, 2)) * ring_int::<T>(n * (n + 1));
    one / denom
}

/// The two `‖DQ‖` bounds in circulation: `(K̄+1)(1+(K̄+2)n(n+1))` and the
/// variant `(K̄+1)(1+(K̄+2)²n(n+1))`.
pub fn dq_bounds(kbar: f64, n: usize) -> (f64, f64) {
    let s = (n * (n + 1)) as f64;
    ((kbar + 1.0) * (1.0 + (kbar + 2.0) * s), (kbar + 1.0) * (1.0 + (kbar + 2.0).powi(2) * s))
}

/// Upper-triangular `Q` with positive diagonal and `QᵀDQ = B`, where
/// `D = diag(signs)`.
///
/// `q_ii = (ε_i(b_ii − Σ_{m<i} ε_m q_mi²))^{1/2}` and
/// `q_ij = (b_ij − Σ_{m<i} ε_m q_mi q_mj)/(ε_i q_ii)` for `j > i`.
pub fn signed_cholesky(b: &Matrix<f64>, signs: &[f64]) -> Result<Matrix<f64>> {
    let n = signs.len();
    if b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.rows() });
    }
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        let mut s = b[(i, i)];
        for m in 0..i {
            s -= signs[m] * q[(m, i)] * q[(m, i)];
        }
        let pivot = signs[i] * s;
        if !(pivot > 0.0) {
            return Err(Error::SignBreakdown { index: i, pivot });
        }
        let qii = pivot.sqrt();
        q[(i, i)] = qii;
        for j in i + 1..n {
            let mut s = b[(i, j)];
            for m in 0..i {
                s -= signs[m] * q[(m, i)] * q[(m, j)];
            }
            q[(i, j)] = s / (signs[i] * qii);
        }
    }
    Ok(q)
}

/// `x ↦ Q(x)` for a symmetric family `B̄` given as a `JetOracle` with `n²`
/// outputs (row-major).
pub struct TriangularFamily<O> {
    bbar: O,
    n: usize,
    d0: Vec<f64>,
    kbar: f64,
    k: usize,
    pub delta_diag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub n: usize,
    #[serde(rename = "D0")]
    pub d0: Vec<f64>,
    #[serde(rename = "Kbar")]
    pub kbar: f64,
    pub k: usize,
    pub delta_diag: f64,
    pub dq_bound: f64,
    pub dq_bound_variant: f64,
}

/// Builds the family after checking `B̄(0) = diag(±1)` to 1e-10.
pub fn diagonalize_family<O: JetOracle<f64>>(bbar: O, kbar: f64, n: usize, k: usize) -> Result<TriangularFamily<O>> {
    if bbar.dims_out() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: bbar.dims_out() });
    }
    if !(kbar >= 0.0) || n == 0 || k == 0 {
        return Err(Error::InvalidArgument("need K̄ ≥ 0, n ≥ 1, k ≥ 1".into()));
    }
    let b0 = Matrix::new(n, n, bbar.value(&vec![0.0; bbar.dims_in()])?)?;
    let mut d0 = Vec::with_capacity(n);
    for i in 0..n {
        let s = if b0[(i, i)] >= 0.0 { 1.0 } else { -1.0 };
        d0.push(s);
    }
    if b0.sub(&Matrix::from_diag(&d0)).max_abs() > 1e-10 {
        return Err(Error::InvalidArgument("B̄(0) must equal diag(±1) to 1e-10".into()));
    }
    Ok(TriangularFamily { bbar, n, d0, kbar, k, delta_diag: diag_delta(kbar, n as u64) })
}

impl<O: JetOracle<f64>> TriangularFamily<O> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims_in(&self) -> usize {
        self.bbar.dims_in()
    }

    pub fn d0(&self) -> &[f64] {
        &self.d0
    }

    pub fn bbar(&self, x: &[f64]) -> Result<Matrix<f64>> {
        Matrix::new(self.n, self.n, self.bbar.value(x)?)
    }

    pub fn q(&self, x: &[f64]) -> Result<Matrix<f64>> {
        signed_cholesky(&self.bbar(x)?, &self.d0)
    }

    /// `‖QᵀD₀Q − B̄‖_max` at `x`.
    pub fn reconstruction_residual(&self, x: &[f64]) -> Result<f64> {
        let b = self.bbar(x)?;
        let q = self.q(x)?;
        Ok(q.transpose().matmul(&Matrix::from_diag(&self.d0)).matmul(&q).sub(&b).max_abs())
    }

    pub fn summary(&self) -> FamilySummary {
        let (a, b) = dq_bounds(self.kbar, self.n);
        FamilySummary {
            n: self.n,
            d0: self.d0.clone(),
            kbar: self.kbar,
            k: self.k,
            delta_diag: self.delta_diag,
            dq_bound: a,
            dq_bound_variant: b,
        }
    }
}

/// Reconstruction on `B_{δ}`, `Q(0) = I`, triangularity and the `‖DQ‖` bound.
pub fn verify_family<O: JetOracle<f64>>(fam: &TriangularFamily<O>, samples: usize, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let d = fam.dims_in();
    let origin = vec![0.0; d];
    let q0 = fam.q(&origin)?;
    report.push(PropertyCheck::at_most(
        "q_at_origin",
        q0.sub(&Matrix::identity(fam.n)).max_abs(),
        1e-12,
        1,
        Some(origin.clone()),
    ));
    let pts = sampling::sample_ball(seed, 1, &origin, fam.delta_diag, samples);
    let rec = pts
        .par_iter()
        .map(|x| -> Result<(Worst, Worst)> {
            let mut w = Worst::max();
            w.offer(fam.reconstruction_residual(x)?, x);
            let q = fam.q(x)?;
            let mut shape = 0.0f64;
            for i in 0..fam.n {
                for j in 0..i {
                    shape = shape.max(q[(i, j)].abs());
                }
                if !(q[(i, i)] > 0.0) {
                    shape = f64::INFINITY;
                }
            }
            let mut s = Worst::max();
            s.offer(shape, x);
            Ok((w, s))
        })
        .try_reduce(|| (Worst::max(), Worst::max()), |a, b| Ok((a.0.merge(b.0), a.1.merge(b.1))))?;
    report.push(PropertyCheck::at_most("reconstruction", rec.0.value, 1e-10, pts.len(), rec.0.witness));
    report.push(
        PropertyCheck::at_most("upper_triangular_positive", rec.1.value, 0.0, pts.len(), rec.1.witness)
            .with_note("largest |q_ij| below the diagonal; infinite if a diagonal entry is not positive"),
    );

    let n = fam.n;
    let qmap = FiniteDifferenceOracle::new(d, n * n, 1, |x: &[f64]| Ok(fam.q(x)?.into_data())).with_max_step(0.05 * fam.delta_diag);
    let inner = sampling::sample_ball(seed, 2, &origin, fam.delta_diag * 0.9, samples.min(200));
    let (bound, variant) = dq_bounds(fam.kbar, n);
    let dq = inner
        .par_iter()
        .map(|x| -> Result<Worst> {
            let mut w = Worst::max();
            w.offer(qmap.eval(x, 1)?.frobenius_norm(), x);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(
        PropertyCheck::at_most("dq_bound", dq.value, bound * (1.0 + 1e-6), inner.len(), dq.witness)
            .with_note(format!("Frobenius norm of the finite-difference DQ; variant bound {variant:e}")),
    );
    Ok(report)
}
