//! The splitting chart: `f∘φ(x, y) = f(x₀) + Σ ±xᵢ² + α(y)` near a critical
//! point whose Hessian has rank `p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::signed_cholesky;
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::jets::{compose_bound, inverse_bound, CkNormBound, FiniteDifferenceOracle, JetOracle, Reparametrized};
use crate::newton::newton;
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, dist, norm};
use crate::spectral::{signature_diagonalize, symmetric_eigen, operator_norm, Matrix};

/// `δ = σ^{5/2}/(32(K+1)^{9/2})·min(1, 2σ²/(3(p²+p+1)), σ^{3/2}/(2(p²+p+1)))`.
pub fn splitting_delta(k_norm: f64, sigma_p: f64, p: usize) -> Result<f64> {
    if !(sigma_p > 0.0) || p == 0 {
        return Err(Error::InvalidArgument("need σ_p > 0 and p ≥ 1".into()));
    }
    if sigma_p > k_norm {
        return Err(Error::InvalidArgument(format!("σ_p = {sigma_p} exceeds K = {k_norm}")));
    }
    let s = (p * p + p + 1) as f64;
    let m = 1f64.min(2.0 * sigma_p * sigma_p / (3.0 * s)).min(sigma_p.powf(1.5) / (2.0 * s));
    Ok(sigma_p.powf(2.5) / (32.0 * (k_norm + 1.0).powf(4.5)) * m)
}

/// The intermediate radii of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRadii {
    #[serde(rename = "Kbar")]
    pub kbar: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub r3: f64,
    /// `min(δ₂, r₃)·δ₃/2`.
    pub internal: f64,
    /// [`splitting_delta`].
    pub theorem: f64,
}

pub fn split_radii(k_norm: f64, sigma_p: f64, p: usize) -> Result<SplitRadii> {
    let theorem = splitting_delta(k_norm, sigma_p, p)?;
    let (k, s) = (k_norm, sigma_p);
    let kbar = k / s;
    let pp = (p * (p + 1)) as f64;
    let delta1 = 1.0 / (8.0 * k * (k + 1.0) * (1.0 + (k + 1.0).powi(2) / (s * s)));
    let delta2 = delta1.min(1.0 / (4.0 * (kbar + 1.0) * (kbar + 2.0) * (1.0 + (kbar + 2.0).powi(2) * pp)));
    let delta3 = 0.5 * (s / (1.0 + s)).sqrt();
    let r3 = delta3 / (2.0 * (kbar + 1.0) * (1.0 + (kbar + 2.0).powi(2) * pp) * k.sqrt());
    let internal = delta2.min(r3) * delta3 / 2.0;
    Ok(SplitRadii { kbar, delta1, delta2, delta3, r3, internal, theorem })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitBounds {
    /// `32(K+1)⁵/σ_p^{5/2}`.
    pub dphi: f64,
    /// `M(K, σ_p, k)` bounding `‖φ‖_{C^{k−1}}`.
    pub ck_phi: f64,
}

/// `M(K, σ_p, k)` assembled from the constants of the construction.
pub fn ck_phi_bound(k_norm: f64, sigma_p: f64, p: usize, k: usize) -> f64 {
    let (kk, s) = (k_norm, sigma_p);
    let kbar = kk / s;
    let kf = k as u32;
    let delta1 = 1.0 / (8.0 * kk * (kk + 1.0) * (1.0 + (kk + 1.0).powi(2) / (s * s)));
    let m1 = 2f64.powi(k as i32 - 2) * inverse_bound(kk, kk / delta1, kf - 2) * kk;
    let m2 = 1.0 + m1;
    let pp = (p * (p + 1)) as f64;
    let m3 = 2f64.powi(k as i32 - 2)
        * (kbar + 1.0)
        * inverse_bound(kbar + 1.0, (kbar + 1.0) * (1.0 + (kbar + 2.0) * pp), kf - 2);
    let m4 = 2f64.powi(k as i32 - 1) * m3 * kk.sqrt() + 1.0;
    compose_bound(inverse_bound(m4, 2.0 * ((1.0 + s) / s).sqrt(), kf - 1), m2, kf - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// `σ_{p+1} ≤ rank_rel_tol·σ₁` declares rank `p`.
    pub rank_rel_tol: f64,
    pub critical_tol: f64,
    pub quadrature_nodes: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { rank_rel_tol: 1e-8, critical_tol: 1e-10, quadrature_nodes: 12 }
    }
}

/// Serializable part of a [`SplitChart`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub x0: Vec<f64>,
    pub p: usize,
    pub signs: Vec<f64>,
    pub delta: f64,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub sigma_p: f64,
    pub k: usize,
    pub radii: SplitRadii,
    pub bounds: SplitBounds,
    /// Columns are the rotated coordinate axes.
    pub rotation: Matrix<f64>,
}

pub struct SplitChart<'a, O: ?Sized> {
    f: &'a O,
    rot: Reparametrized<&'a O>,
    summary: SplitSummary,
    n: usize,
    f_x0: f64,
    q0: Matrix<f64>,
    q0_inv: Matrix<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Runs the construction at the critical point `x0`.
pub fn build_split_chart<'a, O: JetOracle<f64> + ?Sized>(
    f: &'a O,
    x0: &[f64],
    kbound: &CkNormBound<f64>,
    k: usize,
    opts: &SplitOptions,
) -> Result<SplitChart<'a, O>> {
    let n = f.dims_in();
    if f.dims_out() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.dims_out() });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
    }
    if k < 3 || kbound.order < k || f.max_order() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need 3 ≤ k ≤ order of the norm bound (k = {k}, bound order = {})",
            kbound.order
        )));
    }
    let grad = f.gradient(x0)?;
    let gn = norm(&grad);
    if gn > opts.critical_tol {
        return Err(Error::NotCritical { gradient_norm: gn });
    }
    let h = f.hessian(x0, 0)?;
    let (vals, vecs) = symmetric_eigen(&h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].abs().partial_cmp(&vals[a].abs()).unwrap_or(std::cmp::Ordering::Equal));
    let top = vals[order[0]].abs();
    let tol = opts.rank_rel_tol * top;
    let p = order.iter().filter(|&&i| vals[i].abs() > tol).count();
    if p == 0 {
        return Err(Error::DegenerateBeyondRank { sigma_p: top, tol });
    }
    let sigma_p = vals[order[p - 1]].abs();
    let mut v = Matrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let col = vecs.column(i);
        let lead = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let s = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            v[(r, c)] = s * col[r];
        }
    }
    let k_norm = kbound.value;
    let radii = split_radii(k_norm, sigma_p, p)?;
    let dprime = 1.0 / (2.0 * (1.0 + (k_norm + 1.0).powi(2) / (sigma_p * sigma_p)).sqrt());
    let rprime = dprime / k_norm;
    if !kbound.ball.contains_ball(x0, rprime) {
        return Err(Error::DomainTooSmall { required: dist(x0, &kbound.ball.center) + rprime, available: kbound.ball.radius });
    }
    let rot = Reparametrized::new(f, x0.to_vec(), v.clone(), Matrix::identity(1))?;
    let (nodes, weights) = gauss_legendre(opts.quadrature_nodes);
    let mut chart = SplitChart {
        f,
        rot,
        summary: SplitSummary {
            x0: x0.to_vec(),
            p,
            signs: Vec::new(),
            delta: radii.theorem,
            k_norm,
            sigma_p,
            k,
            radii,
            bounds: SplitBounds {
                dphi: 32.0 * (k_norm + 1.0).powi(5) / sigma_p.powf(2.5),
                ck_phi: ck_phi_bound(k_norm, sigma_p, p, k),
            },
            rotation: v,
        },
        n,
        f_x0: f.value(x0)?[0],
        q0: Matrix::identity(p),
        q0_inv: Matrix::identity(p),
        nodes,
        weights,
    };
    let b00 = chart.b_matrix(&vec![0.0; p], &vec![0.0; p], &vec![0.0; n - p])?;
    let sig = signature_diagonalize(&b00, None)?;
    chart.summary.signs = sig.signs();
    chart.q0_inv = sig.q0.inverse()?;
    chart.q0 = sig.q0;
    Ok(chart)
}

impl<'a, O: JetOracle<f64> + ?Sized> SplitChart<'a, O> {
    pub fn summary(&self) -> &SplitSummary {
        &self.summary
    }

    pub fn p(&self) -> usize {
        self.summary.p
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    pub fn signs(&self) -> &[f64] {
        &self.summary.signs
    }

    /// Certified radius of the theorem.
    pub fn delta(&self) -> f64 {
        self.summary.delta
    }

    /// `min(δ₂, r₃)·δ₃/2`, the radius rebuilt from the individual steps.
    /// It can fall below `delta()` for small `K/σ_p`.
    pub fn delta_internal(&self) -> f64 {
        self.summary.radii.internal
    }

    /// Radius on which the evaluators accept points: the larger of
    /// `delta()` and `delta_internal()`.
    pub fn domain_radius(&self) -> f64 {
        self.summary.delta.max(self.summary.radii.internal)
    }

    pub fn q0(&self) -> &Matrix<f64> {
        &self.q0
    }

    fn join(x: &[f64], y: &[f64]) -> Vec<f64> {
        [x, y].concat()
    }

    /// Rotated Hessian at `(x, y)`.
    fn hess(&self, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        self.rot.hessian(&Self::join(x, y), 0)
    }

    /// Step 1: `g(y)` with `∂f/∂x(g(y), y) = 0`, `g(0) = 0`, rotated coordinates.
    pub fn g(&self, y: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        if y.len() != self.n - p {
            return Err(Error::DimensionMismatch { expected: self.n - p, found: y.len() });
        }
        let out = newton(
            vec![0.0; p],
            |x| {
                let z = Self::join(x, y);
                let grad = self.rot.gradient(&z)?;
                let h = self.rot.hessian(&z, 0)?;
                Ok((grad[..p].to_vec(), h.block(0, 0, p, p)))
            },
            None,
            1e-15,
            1e-12,
        )?;
        Ok(out.x)
    }

    fn alpha_at(&self, gy: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.rot.value(&Self::join(gy, y))?[0] - self.f_x0)
    }

    /// `α(y) = f(x₀ + V(g(y), y)) − f(x₀)`.
    pub fn alpha(&self, y: &[f64]) -> Result<f64> {
        let gy = self.g(y)?;
        self.alpha_at(&gy, y)
    }

    /// `Dα(y) = ∂f/∂y(g(y), y)`.
    pub fn alpha_gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        let gy = self.g(y)?;
        Ok(self.rot.gradient(&Self::join(&gy, y))?[self.p()..].to_vec())
    }

    /// `D²α(y) = f_yy + f_yx·Dg` with `Dg = −f_xx⁻¹·f_xy`.
    pub fn alpha_hessian(&self, y: &[f64]) -> Result<Option<Matrix<f64>>> {
        let (p, n) = (self.p(), self.n);
        if p == n {
            return Ok(None);
        }
        let gy = self.g(y)?;
        let h = self.hess(&gy, y)?;
        let q = n - p;
        let fxx = h.block(0, 0, p, p);
        let fxy = h.block(0, p, p, q);
        let fyy = h.block(p, p, q, q);
        let dg = fxx.inverse()?.matmul(&fxy).scale(-1.0);
        Ok(Some(fyy.add(&fxy.transpose().matmul(&dg))))
    }

    /// Step 3 kernel: `B(x, y) = ∫₀¹∫₀¹ t·∂²f₂/∂x²(stx, y) ds dt`, with
    /// `∂²f₂/∂x²(x, y) = f_xx(x + g(y), y)`.
    fn b_matrix(&self, x: &[f64], gy: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        let p = self.p();
        let mut b = Matrix::zeros(p, p);
        let mut pt = vec![0.0; p];
        for (&t, &wt) in self.nodes.iter().zip(&self.weights) {
            for (&s, &ws) in self.nodes.iter().zip(&self.weights) {
                for i in 0..p {
                    pt[i] = s * t * x[i] + gy[i];
                }
                let h = self.hess(&pt, y)?;
                let c = wt * ws * t;
                for i in 0..p {
                    for j in 0..p {
                        b[(i, j)] += c * h[(i, j)];
                    }
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                let m = 0.5 * (b[(i, j)] + b[(j, i)]);
                b[(i, j)] = m;
                b[(j, i)] = m;
            }
        }
        Ok(b)
    }

    /// `B(x, y)` in rotated coordinates.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        let gy = self.g(y)?;
        self.b_matrix(x, &gy, y)
    }

    /// `f₂(x, y) = f(x + g(y), y) − f(x₀) − α(y)`.
    pub fn f2(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let gy = self.g(y)?;
        let shifted: Vec<f64> = x.iter().zip(&gy).map(|(a, b)| a + b).collect();
        Ok(self.rot.value(&Self::join(&shifted, y))?[0] - self.f_x0 - self.alpha_at(&gy, y)?)
    }

    fn bbar_at(&self, x: &[f64], gy: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        let b = self.b_matrix(x, gy, y)?;
        Ok(self.q0.transpose().matmul(&b).matmul(&self.q0))
    }

    /// `B̄(x, y) = Q₀ᵀ·B(x, y)·Q₀`.
    pub fn bbar(&self, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        let gy = self.g(y)?;
        self.bbar_at(x, &gy, y)
    }

    /// `Q(x, y)` with `QᵀD₀Q = B̄`.
    pub fn q(&self, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
        signed_cholesky(&self.bbar(x, y)?, self.signs())
    }

    fn phi2_at(&self, x: &[f64], gy: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let q = signed_cholesky(&self.bbar_at(x, gy, y)?, self.signs())?;
        Ok(q.mul_vec(&self.q0_inv.mul_vec(x)))
    }

    /// First block of `φ₂(x, y) = (Q(x, y)·Q₀⁻¹·x, y)`.
    pub fn phi2(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let gy = self.g(y)?;
        self.phi2_at(x, &gy, y)
    }

    /// Solves `φ₂(x, y) = (u, y)` for `x` by Newton with a central-difference
    /// Jacobian, seeded at `Q₀·u`.
    fn phi2_inverse_at(&self, u: &[f64], gy: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        let scale = norm(u) + self.domain_radius();
        let h = 1e-3 * self.domain_radius().max(norm(u));
        let out = newton(
            self.q0.mul_vec(u),
            |x| {
                let val = self.phi2_at(x, gy, y)?;
                let mut jac = Matrix::zeros(p, p);
                let mut xp = x.to_vec();
                for c in 0..p {
                    xp[c] = x[c] + h;
                    let a = self.phi2_at(&xp, gy, y)?;
                    xp[c] = x[c] - h;
                    let b = self.phi2_at(&xp, gy, y)?;
                    xp[c] = x[c];
                    for r in 0..p {
                        jac[(r, c)] = (a[r] - b[r]) / (2.0 * h);
                    }
                }
                Ok((val.iter().zip(u).map(|(a, b)| a - b).collect(), jac))
            },
            None,
            1e-15 * scale,
            1e-12 * scale,
        )?;
        Ok(out.x)
    }

    fn check_chart_point(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: w.len() });
        }
        let d = norm(w);
        let radius = self.domain_radius();
        if d > radius * (1.0 + 1e-9) {
            return Err(Error::OutsideCertifiedBall { distance: d, radius });
        }
        Ok(())
    }

    /// `φ(w)` in the original coordinates: `x₀ + V·φ₁(φ₂⁻¹(w))`, for
    /// `‖w‖ ≤ domain_radius()`.
    pub fn eval_phi(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_chart_point(w)?;
        let p = self.p();
        let (u, y) = w.split_at(p);
        let gy = self.g(y)?;
        let x = self.phi2_inverse_at(u, &gy, y)?;
        let shifted: Vec<f64> = x.iter().zip(&gy).map(|(a, b)| a + b).collect();
        Ok(self.rot.to_inner(&Self::join(&shifted, y)))
    }

    /// `f(x₀) + Σ εᵢuᵢ² + α(y)` at `w = (u, y)`.
    pub fn normal_form(&self, w: &[f64]) -> Result<f64> {
        let p = self.p();
        let (u, y) = w.split_at(p);
        let quad: f64 = u.iter().zip(self.signs()).map(|(a, s)| s * a * a).sum();
        Ok(self.f_x0 + quad + if y.is_empty() { 0.0 } else { self.alpha(y)? })
    }

    /// `|f(φ(w)) − normal_form(w)|`.
    pub fn normal_form_error(&self, w: &[f64]) -> Result<f64> {
        let x = self.eval_phi(w)?;
        Ok((self.f.value(&x)?[0] - self.normal_form(w)?).abs())
    }
}

/// Largest [`SplitChart::normal_form_error`] over `samples` uniform points
/// of `B_radius(0)` in chart coordinates.
pub fn normal_form_residual_on<O: JetOracle<f64> + ?Sized>(
    chart: &SplitChart<'_, O>,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let ws = sampling::sample_ball(seed, 7, &vec![0.0; chart.dims()], radius, samples);
    let errs = ws.par_iter().map(|w| chart.normal_form_error(w)).collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// [`normal_form_residual_on`] over the certified ball `B_δ`.
pub fn normal_form_residual<O: JetOracle<f64> + ?Sized>(chart: &SplitChart<'_, O>, samples: usize, seed: u64) -> Result<f64> {
    normal_form_residual_on(chart, chart.delta(), samples, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitVerifyOptions {
    pub samples: usize,
    pub derivative_samples: usize,
    pub seed: u64,
}

impl Default for SplitVerifyOptions {
    fn default() -> Self {
        Self { samples: 1_000, derivative_samples: 50, seed: 0 }
    }
}

/// Normal-form residual, the 2-jet of `α`, the `‖Dφ‖` bound, the quadratic
/// representation `xᵀBx = f₂` and the `Q` reconstruction.
pub fn verify_split<O: JetOracle<f64> + ?Sized>(chart: &SplitChart<'_, O>, opts: &SplitVerifyOptions) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let n = chart.dims();
    let p = chart.p();
    let origin = vec![0.0; n];
    let ws = sampling::sample_ball(opts.seed, 1, &origin, chart.delta(), opts.samples);

    let nf = ws
        .par_iter()
        .map(|w| -> Result<Worst> {
            let mut r = Worst::max();
            r.offer(chart.normal_form_error(w)?, w);
            Ok(r)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most("normal_form_residual", nf.value, 1e-9, ws.len(), nf.witness));

    let y0 = vec![0.0; n - p];
    let (a0, da0, d2a0) = if p == n {
        (0.0, 0.0, 0.0)
    } else {
        (
            chart.alpha(&y0)?.abs(),
            norm(&chart.alpha_gradient(&y0)?),
            chart.alpha_hessian(&y0)?.map(|m| m.max_abs()).unwrap_or(0.0),
        )
    };
    report.push(PropertyCheck::at_most("alpha_value", a0, 1e-8, 1, Some(y0.clone())));
    report.push(PropertyCheck::at_most("alpha_gradient", da0, 1e-8, 1, Some(y0.clone())));
    report.push(PropertyCheck::at_most("alpha_hessian", d2a0, 1e-8, 1, Some(y0)));

    let phi = FiniteDifferenceOracle::new(n, n, 1, |w: &[f64]| chart.eval_phi(w)).with_max_step(0.05 * chart.delta());
    let inner = sampling::sample_ball(opts.seed, 2, &origin, chart.delta() * 0.9, opts.derivative_samples);
    let dphi = inner
        .par_iter()
        .map(|w| -> Result<Worst> {
            let mut r = Worst::max();
            r.offer(operator_norm(&phi.jacobian(w)?), w);
            Ok(r)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most("dphi_bound", dphi.value, chart.summary().bounds.dphi, inner.len(), dphi.witness));

    // (x, y) in rotated coordinates, sampled in the construction's domain
    let zs = sampling::sample_ball(opts.seed, 3, &origin, chart.delta_internal(), opts.samples.min(300));
    let rep = zs
        .par_iter()
        .map(|z| -> Result<(Worst, Worst)> {
            let (x, y) = z.split_at(p);
            let b = chart.kernel(x, y)?;
            let xbx: f64 = (0..p).map(|i| (0..p).map(|j| x[i] * b[(i, j)] * x[j]).sum::<f64>()).sum();
            let mut q = Worst::max();
            q.offer((xbx - chart.f2(x, y)?).abs(), z);
            let bbar = chart.bbar(x, y)?;
            let qm = signed_cholesky(&bbar, chart.signs())?;
            let res = qm.transpose().matmul(&Matrix::from_diag(chart.signs())).matmul(&qm).sub(&bbar).max_abs();
            let mut r = Worst::max();
            r.offer(res, z);
            Ok((q, r))
        })
        .try_reduce(|| (Worst::max(), Worst::max()), |a, b| Ok((a.0.merge(b.0), a.1.merge(b.1))))?;
    report.push(PropertyCheck::at_most("quadratic_representation", rep.0.value, 1e-10, zs.len(), rep.0.witness));
    report.push(PropertyCheck::at_most("q_reconstruction", rep.1.value, 1e-10, zs.len(), rep.1.witness));
    Ok(report)
}
