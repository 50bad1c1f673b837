//! Certified local inverses: radii, Lipschitz and `C^k` bounds for the
//! inverse of a map with invertible derivative, plus a Newton evaluator.

use num_traits::Num;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{inverse_bound, pointwise_ck_norm, CkNormBound, FiniteDifferenceOracle, JetOracle};
use crate::newton::newton;
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, dist, norm, sub};
use crate::spectral::{distance_to_singular, operator_norm, singular_values};

/// `(ρ₁, ρ₂, L) = (rδ/(2K), rδ/2, 1/δ)`.
pub fn inverse_radii<T: Num + PartialOrd + Clone>(k_norm: T, delta: T, r: T) -> Result<(T, T, T)> {
    if !(k_norm > T::zero() && delta > T::zero() && r > T::zero()) {
        return Err(Error::InvalidArgument("K, delta and r must be positive".into()));
    }
    let two = T::one() + T::one();
    let rd = r * delta.clone();
    Ok((rd.clone() / (two.clone() * k_norm), rd / two, T::one() / delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseCertificate {
    pub x0: Vec<f64>,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub delta: f64,
    pub r: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub lip_inverse: f64,
    pub ck_inverse: Option<f64>,
    pub k: usize,
}

impl InverseCertificate {
    /// Formula-only certificate from user-supplied `δ` and `r`.
    pub fn from_parts(x0: Vec<f64>, k_norm: f64, delta: f64, r: f64, k: usize) -> Result<Self> {
        let (rho1, rho2, lip_inverse) = inverse_radii(k_norm, delta, r)?;
        let ck_inverse = (k >= 2).then(|| inverse_bound(k_norm, lip_inverse, k as u32));
        Ok(Self { x0, k_norm, delta, r, rho1, rho2, lip_inverse, ck_inverse, k })
    }

    /// The same certificate with `δ` lowered to `delta` (and `r = δ/K`
    /// recomputed). Larger values are ignored.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        if delta >= self.delta {
            return Ok(self.clone());
        }
        Self::from_parts(self.x0.clone(), self.k_norm, delta, delta / self.k_norm, self.k)
    }
}

fn singular_tol(sigma_max: f64) -> f64 {
    1e-12 * sigma_max.max(1.0)
}

/// Certificate for a smooth map: `δ = σₙ(Df(x₀))/2`, `r = δ/K`.
pub fn smooth_inverse_certificate<O: JetOracle<f64> + ?Sized>(
    f: &O,
    x0: &[f64],
    kbound: &CkNormBound<f64>,
    k: usize,
) -> Result<InverseCertificate> {
    if f.dims_in() != f.dims_out() {
        return Err(Error::DimensionMismatch { expected: f.dims_in(), found: f.dims_out() });
    }
    if k < 2 || kbound.order < k {
        return Err(Error::InvalidArgument(format!(
            "need 2 ≤ k ≤ order of the norm bound (k = {k}, bound order = {})",
            kbound.order
        )));
    }
    let jac = f.jacobian(x0)?;
    let sv = singular_values(&jac);
    let sigma = distance_to_singular(&jac)?;
    if sigma <= singular_tol(sv[0]) {
        return Err(Error::SingularJacobian { sigma });
    }
    let k_norm = kbound.value;
    if !(k_norm > 0.0) {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    let delta = sigma / 2.0;
    let r = delta / k_norm;
    if !kbound.ball.contains_ball(x0, r) {
        return Err(Error::DomainTooSmall {
            required: dist(x0, &kbound.ball.center) + r,
            available: kbound.ball.radius,
        });
    }
    InverseCertificate::from_parts(x0.to_vec(), k_norm, delta, r, k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseEvaluation {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Iterates projected back onto `B_r(x₀)`.
    pub clamped: usize,
}

/// `f⁻¹(y)` by Newton from `x₀`, iterates kept in `B_r(x₀)`.
///
/// The result lies in `B_{r/2}(x₀)`, not necessarily in `B_{ρ₁}(x₀)`: since
/// `f` is `K`-Lipschitz, `f(B_{ρ₁})` sits inside `B_{ρ₂}` rather than around it.
pub fn evaluate_inverse<O: JetOracle<f64> + ?Sized>(f: &O, cert: &InverseCertificate, y: &[f64]) -> Result<Vec<f64>> {
    evaluate_inverse_detailed(f, cert, y).map(|e| e.x)
}

pub fn evaluate_inverse_detailed<O: JetOracle<f64> + ?Sized>(
    f: &O,
    cert: &InverseCertificate,
    y: &[f64],
) -> Result<InverseEvaluation> {
    if y.len() != f.dims_out() {
        return Err(Error::DimensionMismatch { expected: f.dims_out(), found: y.len() });
    }
    let y0 = f.value(&cert.x0)?;
    let dy = dist(y, &y0);
    if dy > cert.rho2 * (1.0 + 1e-9) {
        return Err(Error::OutsideCertifiedBall { distance: dy, radius: cert.rho2 });
    }
    let scale = 1.0 + norm(y);
    let out = newton(
        cert.x0.clone(),
        |x| Ok((sub(&f.value(x)?, y), f.jacobian(x)?)),
        Some((&cert.x0, cert.r)),
        1e-12 * scale,
        1e-10 * scale,
    )?;
    // f is injective on B_r with modulus δ, so the preimage sits within
    // ‖y − f(x₀)‖/δ ≤ r/2 of x₀.
    let dx = dist(&out.x, &cert.x0);
    let reach = dy / cert.delta * (1.0 + 1e-9) + 1e-15;
    if dx > reach {
        return Err(Error::StepLeftDomain { distance: dx, radius: reach });
    }
    Ok(InverseEvaluation { x: out.x, residual: out.residual, iterations: out.iterations, clamped: out.clamped })
}

/// Sample counts for [`verify_inverse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseVerifyOptions {
    pub pairs: usize,
    pub targets: usize,
    pub jacobian_samples: usize,
    pub ck_samples: usize,
    pub seed: u64,
}

impl Default for InverseVerifyOptions {
    fn default() -> Self {
        Self { pairs: 10_000, targets: 1_000, jacobian_samples: 1_000, ck_samples: 40, seed: 0 }
    }
}

/// Checks a certificate's conclusions by sampling: injectivity modulus on
/// `B_{ρ₁}`, inversion of targets in `B_{ρ₂}`, derivative variation on `B_r`,
/// and the `C^k` bound of the inverse.
pub fn verify_inverse<O: JetOracle<f64> + ?Sized>(
    f: &O,
    cert: &InverseCertificate,
    opts: &InverseVerifyOptions,
) -> Result<VerificationReport> {
    let x0 = &cert.x0;
    let mut report = VerificationReport::default();

    let mut rng = sampling::rng(opts.seed, 1);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.pairs)
        .map(|_| (sampling::uniform_in_ball(&mut rng, x0, cert.rho1), sampling::uniform_in_ball(&mut rng, x0, cert.rho1)))
        .collect();
    let modulus = pairs
        .par_iter()
        .map(|(a, b)| -> Result<Worst> {
            let mut w = Worst::min();
            let d = dist(a, b);
            if d > 0.0 {
                let ratio = dist(&f.value(a)?, &f.value(b)?) / d;
                w.offer(ratio, &[a.as_slice(), b.as_slice()].concat());
            }
            Ok(w)
        })
        .try_reduce(Worst::min, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_least(
        "injectivity_modulus",
        modulus.value,
        cert.delta * (1.0 - 1e-9),
        opts.pairs,
        modulus.witness,
    ));

    let y0 = f.value(x0)?;
    let targets = sampling::sample_ball(opts.seed, 2, &y0, cert.rho2, opts.targets);
    let inv = targets
        .par_iter()
        .map(|y| -> (Worst, Worst, Option<String>) {
            let mut res = Worst::max();
            let mut reach = Worst::max();
            match evaluate_inverse_detailed(f, cert, y) {
                Ok(e) => {
                    res.offer(e.residual, y);
                    reach.offer(dist(&e.x, x0), y);
                    (res, reach, None)
                }
                Err(err) => {
                    res.offer(f64::INFINITY, y);
                    (res, reach, Some(err.to_string()))
                }
            }
        })
        .reduce(
            || (Worst::max(), Worst::max(), None),
            |a, b| (a.0.merge(b.0), a.1.merge(b.1), a.2.or(b.2)),
        );
    let mut check = PropertyCheck::at_most("inverse_residual", inv.0.value, 1e-10, opts.targets, inv.0.witness);
    if let Some(e) = inv.2 {
        check = check.with_note(e);
    }
    report.push(check);
    report.push(PropertyCheck::at_most(
        "inverse_in_domain",
        inv.1.value,
        cert.r / 2.0 * (1.0 + 1e-9),
        opts.targets,
        inv.1.witness,
    ));

    let jac0 = f.jacobian(x0)?;
    let mut rng = sampling::rng(opts.seed, 3);
    let mut pts: Vec<Vec<f64>> = (0..opts.jacobian_samples).map(|_| sampling::uniform_in_ball(&mut rng, x0, cert.r)).collect();
    pts.extend((0..opts.jacobian_samples / 4).map(|_| sampling::uniform_on_sphere(&mut rng, x0, cert.r)));
    let var = pts
        .par_iter()
        .map(|x| -> Result<Worst> {
            let mut w = Worst::max();
            w.offer(operator_norm(&f.jacobian(x)?.sub(&jac0)), x);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most(
        "derivative_variation",
        var.value,
        cert.delta * (1.0 + 1e-9),
        pts.len(),
        var.witness,
    ));

    if let Some(bound) = cert.ck_inverse {
        let n = f.dims_in();
        let k = cert.k.min(3);
        // stencils reach k·h, keep them inside B_{ρ₂}
        let inverse = FiniteDifferenceOracle::new(n, n, k, |y: &[f64]| evaluate_inverse(f, cert, y))
            .with_max_step(0.2 * cert.rho2 / k as f64);
        let ys = sampling::sample_ball(opts.seed, 4, &y0, cert.rho2 * 0.8, opts.ck_samples);
        let ck = ys
            .par_iter()
            .map(|y| -> Result<Worst> {
                let mut w = Worst::max();
                w.offer(pointwise_ck_norm(&inverse, y, k)?, y);
                Ok(w)
            })
            .try_reduce(Worst::max, |a, b| Ok(a.merge(b)));
        report.push(match ck {
            Ok(w) => PropertyCheck::at_most("ck_inverse", w.value, bound, ys.len(), w.witness)
                .with_note(format!("finite differences up to order {k}")),
            Err(e) => PropertyCheck::failed("ck_inverse", e.to_string()),
        });
    }
    Ok(report)
}
