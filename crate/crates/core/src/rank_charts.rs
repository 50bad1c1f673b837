//! Constant-rank maps: certified radii and the straightening charts `φ`, `ψ`
//! with `ψ∘f∘φ⁻¹(z) = (z₁, …, z_p, 0, …, 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certified_implicit::implicit_delta;
use crate::error::{Error, Result};
use crate::jets::{compose_bound, inverse_bound, CkNormBound, JetOracle};
use crate::newton::newton;
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, dist, norm, sub};
use crate::spectral::{numerical_rank, singular_values, Matrix};

/// Relative threshold for the sampled numerical rank.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub x0: Vec<f64>,
    pub p: usize,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub delta: f64,
    pub r: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub lip_phi: f64,
    pub lip_phi_inv: f64,
    pub lip_psi: f64,
    pub ck_phi: f64,
    pub ck_psi: f64,
    pub k: usize,
    /// Output indices; the first `p` form the pivot block.
    pub row_permutation: Vec<usize>,
    /// Input indices; the first `p` form the pivot block.
    pub col_permutation: Vec<usize>,
}

impl RankCertificate {
    /// Radius around `φ(x₀)` on which `ψ∘f∘φ⁻¹` is defined: `f∘φ⁻¹` has
    /// Lipschitz constant at most `K·L(φ⁻¹)`, so `ρ₂·min(1, 1/(K·L(φ⁻¹)))`
    /// keeps `f(φ⁻¹(z))` inside the domain of `ψ`.
    pub fn normal_form_radius(&self) -> f64 {
        self.rho2 * (1.0 / (self.k_norm * self.lip_phi_inv)).min(1.0)
    }
}

/// Picks `p` rows and columns of `a` by complete pivoting. Each returned
/// permutation lists the chosen indices (ascending) followed by the rest.
pub fn pivot_block(a: &Matrix<f64>, p: usize) -> (Vec<usize>, Vec<usize>) {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    for s in 0..p.min(m).min(n) {
        let (mut bi, mut bj, mut best) = (s, s, -1.0);
        for i in s..m {
            for j in s..n {
                let v = w[(rows[i], cols[j])].abs();
                if v > best {
                    (bi, bj, best) = (i, j, v);
                }
            }
        }
        rows.swap(s, bi);
        cols.swap(s, bj);
        let (pr, pc) = (rows[s], cols[s]);
        let piv = w[(pr, pc)];
        if piv == 0.0 {
            continue;
        }
        for &i in &rows[s + 1..] {
            let l = w[(i, pc)] / piv;
            for &j in &cols[s..] {
                let u = w[(pr, j)];
                w[(i, j)] -= l * u;
            }
        }
    }
    let finish = |mut v: Vec<usize>| {
        let k = p.min(v.len());
        v[..k].sort_unstable();
        v[k..].sort_unstable();
        v
    };
    (finish(rows), finish(cols))
}

/// Certificate for a map of constant rank `p` near `x₀`.
pub fn rank_certificate<O: JetOracle<f64> + ?Sized>(
    f: &O,
    x0: &[f64],
    p: usize,
    kbound: &CkNormBound<f64>,
    k: usize,
) -> Result<RankCertificate> {
    let (n, m) = (f.dims_in(), f.dims_out());
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
    }
    if p == 0 || p > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank p must satisfy 1 ≤ p ≤ min(m, n) = {}", m.min(n))));
    }
    if k < 2 || kbound.order < k {
        return Err(Error::InvalidArgument(format!(
            "need 2 ≤ k ≤ order of the norm bound (k = {k}, bound order = {})",
            kbound.order
        )));
    }
    let k_norm = kbound.value;
    if !(k_norm > 0.0) {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    let jac = f.jacobian(x0)?;
    let (rows, cols) = pivot_block(&jac, p);
    let block = jac.select(&rows[..p], &cols[..p]);
    let sv = singular_values(&block);
    let sigma = sv[p - 1];
    if sigma <= 1e-12 * singular_values(&jac)[0].max(1.0) {
        return Err(Error::SingularLeadingBlock { p, sigma });
    }
    let delta = implicit_delta(k_norm, 1.0 / sigma)?;
    let r = delta / k_norm;
    if !kbound.ball.contains_ball(x0, r) {
        return Err(Error::DomainTooSmall { required: dist(x0, &kbound.ball.center) + r, available: kbound.ball.radius });
    }
    let rank0 = numerical_rank(&jac, RANK_TOL);
    if rank0 != p {
        return Err(Error::RankDrift { expected: p, found: rank0 });
    }
    let mut pts = sampling::sample_ball(0x5eed, 0, x0, r, 200);
    pts.extend((0..40).map(|i| {
        let mut rng = sampling::rng(0x5eed, 1 + i);
        sampling::uniform_on_sphere(&mut rng, x0, r)
    }));
    let drift = pts
        .par_iter()
        .map(|x| f.jacobian(x).map(|j| numerical_rank(&j, RANK_TOL)))
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .find(|&q| q != p);
    if let Some(found) = drift {
        return Err(Error::RankDrift { expected: p, found });
    }
    let lip_phi_inv = 1.0 / delta;
    let ck_psi = compose_bound(inverse_bound(k_norm + 1.0, lip_phi_inv, k as u32), k_norm, k as u32) + 1.0;
    Ok(RankCertificate {
        x0: x0.to_vec(),
        p,
        k_norm,
        delta,
        r,
        rho1: r * delta / (2.0 * (k_norm + 1.0)),
        rho2: r * delta / 2.0,
        lip_phi: k_norm + 1.0,
        lip_phi_inv,
        lip_psi: 1.0 + k_norm / delta,
        ck_phi: k_norm + 1.0,
        ck_psi,
        k,
        row_permutation: rows,
        col_permutation: cols,
    })
}

/// The charts of a [`RankCertificate`]. Chart coordinates put the pivot
/// block first: `φ(x) = (f_{r₁}(x), …, f_{r_p}(x), x_{c_{p+1}}, …, x_{c_n})`
/// and `ψ(y)_j = y_{r_j} − g_{r_j}(y_{r₁}, …, y_{r_p}, φ(x₀)_{p+1}, …)` for
/// `j > p`, with `g = f∘φ⁻¹`.
pub struct StraighteningCharts<'a, O: ?Sized> {
    f: &'a O,
    cert: RankCertificate,
    phi_x0: Vec<f64>,
    f_x0: Vec<f64>,
}

fn check_ball(point: &[f64], center: &[f64], radius: f64) -> Result<()> {
    let d = dist(point, center);
    if d > radius * (1.0 + 1e-9) {
        return Err(Error::OutsideCertifiedBall { distance: d, radius });
    }
    Ok(())
}

impl<'a, O: JetOracle<f64> + ?Sized> StraighteningCharts<'a, O> {
    pub fn new(f: &'a O, cert: RankCertificate) -> Result<Self> {
        let f_x0 = f.value(&cert.x0)?;
        let mut s = Self { f, cert, phi_x0: Vec::new(), f_x0 };
        s.phi_x0 = s.phi_unchecked(&s.cert.x0.clone())?;
        Ok(s)
    }

    pub fn certificate(&self) -> &RankCertificate {
        &self.cert
    }

    pub fn phi_x0(&self) -> &[f64] {
        &self.phi_x0
    }

    fn phi_unchecked(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.cert.p;
        let fx = self.f.value(x)?;
        let mut z: Vec<f64> = self.cert.row_permutation[..p].iter().map(|&i| fx[i]).collect();
        z.extend(self.cert.col_permutation[p..].iter().map(|&j| x[j]));
        Ok(z)
    }

    fn dphi(&self, x: &[f64]) -> Result<Matrix<f64>> {
        let p = self.cert.p;
        let n = x.len();
        let j = self.f.jacobian(x)?;
        let mut d = Matrix::zeros(n, n);
        for (i, &row) in self.cert.row_permutation[..p].iter().enumerate() {
            for c in 0..n {
                d[(i, c)] = j[(row, c)];
            }
        }
        for (i, &col) in self.cert.col_permutation[p..].iter().enumerate() {
            d[(p + i, col)] = 1.0;
        }
        Ok(d)
    }

    /// `φ(x)` for `x ∈ B_{ρ₁}(x₀)`.
    pub fn eval_phi(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_ball(x, &self.cert.x0, self.cert.rho1)?;
        self.phi_unchecked(x)
    }

    fn phi_inverse_unchecked(&self, z: &[f64]) -> Result<Vec<f64>> {
        let scale = 1.0 + norm(z);
        let out = newton(
            self.cert.x0.clone(),
            |x| Ok((sub(&self.phi_unchecked(x)?, z), self.dphi(x)?)),
            Some((&self.cert.x0, self.cert.r)),
            1e-14 * scale,
            1e-11 * scale,
        )?;
        Ok(out.x)
    }

    /// `φ⁻¹(z)` for `z ∈ B_{ρ₂}(φ(x₀))`, by Newton.
    pub fn eval_phi_inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_ball(z, &self.phi_x0, self.cert.rho2)?;
        self.phi_inverse_unchecked(z)
    }

    /// `ψ(y)` for `y ∈ B_{ρ₂}(f(x₀))`.
    pub fn eval_psi(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_ball(y, &self.f_x0, self.cert.rho2)?;
        let p = self.cert.p;
        let rows = &self.cert.row_permutation;
        let mut base: Vec<f64> = rows[..p].iter().map(|&i| y[i]).collect();
        base.extend_from_slice(&self.phi_x0[p..]);
        let g = self.f.value(&self.phi_inverse_unchecked(&base)?)?;
        let mut w: Vec<f64> = rows[..p].iter().map(|&i| y[i]).collect();
        w.extend(rows[p..].iter().map(|&i| y[i] - g[i]));
        Ok(w)
    }

    /// `D(f∘φ⁻¹)(z)` in chart order, computed as `Jf(x)·Dφ(x)⁻¹`.
    pub fn dg(&self, z: &[f64]) -> Result<Matrix<f64>> {
        let x = self.eval_phi_inverse(z)?;
        let j = self.f.jacobian(&x)?;
        let rows = &self.cert.row_permutation;
        let jp = Matrix::from_fn(rows.len(), j.cols(), |i, c| j[(rows[i], c)]);
        Ok(jp.matmul(&self.dphi(&x)?.inverse()?))
    }

    /// `‖ψ∘f∘φ⁻¹(z) − (z₁, …, z_p, 0, …, 0)‖`.
    pub fn normal_form_error(&self, z: &[f64]) -> Result<f64> {
        let x = self.eval_phi_inverse(z)?;
        let w = self.eval_psi(&self.f.value(&x)?)?;
        let p = self.cert.p;
        let target: Vec<f64> = (0..w.len()).map(|i| if i < p { z[i] } else { 0.0 }).collect();
        Ok(dist(&w, &target))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankVerifyOptions {
    pub samples: usize,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for RankVerifyOptions {
    fn default() -> Self {
        Self { samples: 1_000, pairs: 1_000, seed: 0 }
    }
}

fn max_ratio<F>(pairs: &[(Vec<f64>, Vec<f64>)], map: F) -> Result<Worst>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    pairs
        .par_iter()
        .map(|(a, b)| -> Result<Worst> {
            let mut w = Worst::max();
            let d = dist(a, b);
            if d > 0.0 {
                w.offer(dist(&map(a)?, &map(b)?) / d, &[a.as_slice(), b.as_slice()].concat());
            }
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))
}

fn sample_pairs(seed: u64, stream: u64, center: &[f64], radius: f64, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pts = sampling::sample_ball(seed, stream, center, radius, 2 * count);
    pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}

/// Normal form, vanishing block and sampled Lipschitz moduli of the charts.
pub fn verify_rank<O: JetOracle<f64> + ?Sized>(
    charts: &StraighteningCharts<'_, O>,
    opts: &RankVerifyOptions,
) -> Result<VerificationReport> {
    let cert = charts.certificate();
    let p = cert.p;
    let mut report = VerificationReport::default();
    let zs = sampling::sample_ball(opts.seed, 1, charts.phi_x0(), cert.normal_form_radius(), opts.samples);

    let nf = zs
        .par_iter()
        .map(|z| -> Result<Worst> {
            let mut w = Worst::max();
            w.offer(charts.normal_form_error(z)?, z);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most("normal_form_residual", nf.value, 1e-9, zs.len(), nf.witness));

    let block = zs
        .par_iter()
        .take(opts.samples.min(200))
        .map(|z| -> Result<Worst> {
            let dg = charts.dg(z)?;
            let mut w = Worst::max();
            let mut v = 0.0f64;
            for j in p..dg.rows() {
                for l in p..dg.cols() {
                    v = v.max(dg[(j, l)].abs());
                }
            }
            w.offer(v, z);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most(
        "vanishing_block",
        block.value.max(0.0),
        1e-8,
        opts.samples.min(200),
        block.witness,
    ));

    let pairs = sample_pairs(opts.seed, 2, &cert.x0, cert.rho1, opts.pairs);
    let w = max_ratio(&pairs, |x| charts.eval_phi(x))?;
    report.push(PropertyCheck::at_most("lipschitz_phi", w.value, cert.lip_phi * (1.0 + 1e-9), pairs.len(), w.witness));

    let pairs = sample_pairs(opts.seed, 3, charts.phi_x0(), cert.rho2, opts.pairs);
    let w = max_ratio(&pairs, |z| charts.eval_phi_inverse(z))?;
    report.push(PropertyCheck::at_most(
        "lipschitz_phi_inverse",
        w.value,
        cert.lip_phi_inv * (1.0 + 1e-9),
        pairs.len(),
        w.witness,
    ));

    let pairs = sample_pairs(opts.seed, 4, &charts.f_x0, cert.rho2, opts.pairs);
    let w = max_ratio(&pairs, |y| charts.eval_psi(y))?;
    report.push(PropertyCheck::at_most("lipschitz_psi", w.value, cert.lip_psi * (1.0 + 1e-9), pairs.len(), w.witness));
    Ok(report)
}
