//! Certified implicit functions: for `F(x, y) = 0` with invertible `∂F/∂y`,
//! radii and bounds for the solution map `g`, and a continuation solver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{inverse_bound, pointwise_ck_norm, CkNormBound, FiniteDifferenceOracle, JetOracle};
use crate::newton::newton;
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, dist, norm};
use crate::scalar::{lit, Scalar};
use crate::spectral::{singular_values, Matrix};

/// `δ = 1/(2·(1 + (1+K)²·‖M₂⁻¹‖²)^{1/2})`.
pub fn implicit_delta<T: Scalar>(k_norm: T, m2_inv_norm: T) -> Result<T> {
    if !(m2_inv_norm > T::zero()) || !(k_norm >= T::zero()) {
        return Err(Error::InvalidArgument("need K ≥ 0 and ‖M₂⁻¹‖ > 0".into()));
    }
    let one = T::one();
    let a = (one + k_norm) * m2_inv_norm;
    Ok(one / (lit::<T>(2.0) * (one + a * a).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitCertificate {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub delta: f64,
    pub r: f64,
    pub rho: f64,
    pub lip_g: f64,
    pub ck_g: Option<f64>,
    pub k: usize,
}

impl ImplicitCertificate {
    /// Formula-only certificate from user-supplied `δ` and `r`.
    pub fn from_parts(x0: Vec<f64>, y0: Vec<f64>, k_norm: f64, delta: f64, r: f64, k: usize) -> Result<Self> {
        if !(k_norm > 0.0 && delta > 0.0 && r > 0.0) {
            return Err(Error::InvalidArgument("K, delta and r must be positive".into()));
        }
        let rho = r * delta / (2.0 * (k_norm + 1.0));
        let lip_g = k_norm / delta;
        let ck_g = (k >= 2).then(|| 2f64.powi(k as i32 - 1) * inverse_bound(k_norm, lip_g, k as u32 - 1) * k_norm);
        Ok(Self { x0, y0, k_norm, delta, r, rho, lip_g, ck_g, k })
    }

    pub fn m(&self) -> usize {
        self.x0.len()
    }

    pub fn n(&self) -> usize {
        self.y0.len()
    }
}

fn split_dims<O: JetOracle<f64> + ?Sized>(f: &O) -> Result<(usize, usize)> {
    let n = f.dims_out();
    if f.dims_in() <= n {
        return Err(Error::InvalidArgument(format!(
            "F must map ℝᵐ×ℝⁿ → ℝⁿ with m ≥ 1 (got {} inputs, {} outputs)",
            f.dims_in(),
            n
        )));
    }
    Ok((f.dims_in() - n, n))
}

fn joined(x: &[f64], y: &[f64]) -> Vec<f64> {
    [x, y].concat()
}

/// `(∂F/∂x, ∂F/∂y)` at `(x, y)`.
pub fn partials<O: JetOracle<f64> + ?Sized>(f: &O, x: &[f64], y: &[f64]) -> Result<(Matrix<f64>, Matrix<f64>)> {
    let (m, n) = split_dims(f)?;
    let j = f.jacobian(&joined(x, y))?;
    Ok((j.block(0, 0, n, m), j.block(0, m, n, n)))
}

/// `Dg(x) = −(∂F/∂y)⁻¹·∂F/∂x` at `(x, y)`.
pub fn implicit_derivative<O: JetOracle<f64> + ?Sized>(f: &O, x: &[f64], y: &[f64]) -> Result<Matrix<f64>> {
    let (fx, fy) = partials(f, x, y)?;
    Ok(fy.inverse()?.matmul(&fx).scale(-1.0))
}

/// Certificate for smooth `F`: `δ` from `‖∂F/∂y(x₀,y₀)⁻¹‖`, `r = δ/K`.
pub fn smooth_implicit_certificate<O: JetOracle<f64> + ?Sized>(
    f: &O,
    x0: &[f64],
    y0: &[f64],
    kbound: &CkNormBound<f64>,
    k: usize,
) -> Result<ImplicitCertificate> {
    let (m, n) = split_dims(f)?;
    if x0.len() != m || y0.len() != n {
        return Err(Error::DimensionMismatch { expected: m + n, found: x0.len() + y0.len() });
    }
    if k < 2 || kbound.order < k {
        return Err(Error::InvalidArgument(format!(
            "need 2 ≤ k ≤ order of the norm bound (k = {k}, bound order = {})",
            kbound.order
        )));
    }
    let p0 = joined(x0, y0);
    let residual = norm(&f.value(&p0)?);
    if residual > 1e-10 {
        return Err(Error::NotOnZeroSet { residual });
    }
    let (_, fy) = partials(f, x0, y0)?;
    let sv = singular_values(&fy);
    let sigma = sv[n - 1];
    if sigma <= 1e-12 * sv[0].max(1.0) {
        return Err(Error::SingularPartial { sigma });
    }
    let k_norm = kbound.value;
    if !(k_norm > 0.0) {
        return Err(Error::InvalidArgument("K must be positive".into()));
    }
    let delta = implicit_delta(k_norm, 1.0 / sigma)?;
    let r = delta / k_norm;
    if !kbound.ball.contains_ball(&p0, r) {
        return Err(Error::DomainTooSmall { required: dist(&p0, &kbound.ball.center) + r, available: kbound.ball.radius });
    }
    ImplicitCertificate::from_parts(x0.to_vec(), y0.to_vec(), k_norm, delta, r, k)
}

const MIN_STEPS: usize = 8;
const MAX_STEPS: usize = 256;

/// Follows `t ↦ g(x₀ + t(x − x₀))` from `t = 0` to `1`, with an Euler
/// predictor and Newton corrector in `y`. `domain = Some((c, R))` aborts with
/// `PathLeftDomain` when `(x(t), y)` leaves `B_R(c)`.
fn continuation<O: JetOracle<f64> + ?Sized>(
    f: &O,
    x0: &[f64],
    y0: &[f64],
    x: &[f64],
    steps: usize,
    domain: Option<(&[f64], f64)>,
) -> Result<Vec<f64>> {
    let mut y = y0.to_vec();
    let dx: Vec<f64> = x.iter().zip(x0).map(|(a, b)| (a - b) / steps as f64).collect();
    let mut xt = x0.to_vec();
    for s in 1..=steps {
        let dg = implicit_derivative(f, &xt, &y)?;
        let dy = dg.mul_vec(&dx);
        y.iter_mut().zip(&dy).for_each(|(a, b)| *a += b);
        xt = x0.iter().zip(x).map(|(a, b)| a + (b - a) * s as f64 / steps as f64).collect();
        let last = s == steps;
        let (tol, accept) = if last { (1e-14, 1e-11) } else { (1e-11, 1e-9) };
        let xs = xt.clone();
        let out = newton(
            y,
            |yv| {
                let p = joined(&xs, yv);
                let (_, fy) = partials(f, &xs, yv)?;
                Ok((f.value(&p)?, fy))
            },
            None,
            tol,
            accept,
        )?;
        y = out.x;
        if let Some((c, radius)) = domain {
            let d = dist(&joined(&xt, &y), c);
            if d > radius {
                return Err(Error::PathLeftDomain { distance: d, radius });
            }
        }
    }
    Ok(y)
}

fn adaptive<O: JetOracle<f64> + ?Sized>(
    f: &O,
    x0: &[f64],
    y0: &[f64],
    x: &[f64],
    domain: Option<(&[f64], f64)>,
) -> Result<Vec<f64>> {
    let mut steps = MIN_STEPS;
    loop {
        match continuation(f, x0, y0, x, steps, domain) {
            Err(Error::NoConvergence { .. }) if steps < MAX_STEPS => steps *= 2,
            other => return other,
        }
    }
}

/// `g(x)` for `x ∈ B_ρ(x₀)`; the path must stay in `B_r(x₀, y₀)`.
pub fn solve_implicit<O: JetOracle<f64> + ?Sized>(f: &O, cert: &ImplicitCertificate, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != cert.m() {
        return Err(Error::DimensionMismatch { expected: cert.m(), found: x.len() });
    }
    let d = dist(x, &cert.x0);
    if d > cert.rho * (1.0 + 1e-9) {
        return Err(Error::OutsideCertifiedBall { distance: d, radius: cert.rho });
    }
    let p0 = joined(&cert.x0, &cert.y0);
    adaptive(f, &cert.x0, &cert.y0, x, Some((&p0, cert.r)))
}

/// Continuation from `(x₀, y₀)` to `x` without any certificate: no radius
/// check, no domain check. For exploring beyond `B_ρ`.
pub fn continue_implicit<O: JetOracle<f64> + ?Sized>(f: &O, x0: &[f64], y0: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = split_dims(f)?;
    if x0.len() != m || y0.len() != n || x.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: x.len() });
    }
    adaptive(f, x0, y0, x, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitVerifyOptions {
    pub points: usize,
    pub derivative_samples: usize,
    pub ck_samples: usize,
    pub seed: u64,
}

impl Default for ImplicitVerifyOptions {
    fn default() -> Self {
        Self { points: 1_000, derivative_samples: 50, ck_samples: 20, seed: 0 }
    }
}

/// Residual, Lipschitz, derivative-formula and `C^k` checks on `B_ρ(x₀)`.
pub fn verify_implicit<O: JetOracle<f64> + ?Sized>(
    f: &O,
    cert: &ImplicitCertificate,
    opts: &ImplicitVerifyOptions,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let m = cert.m();
    let n = cert.n();
    let xs = sampling::sample_ball(opts.seed, 1, &cert.x0, cert.rho, opts.points);
    let solved: Vec<Result<Vec<f64>>> = xs.par_iter().map(|x| solve_implicit(f, cert, x)).collect();
    if let Some((i, Err(e))) = solved.iter().enumerate().find(|(_, s)| s.is_err()) {
        report.push(PropertyCheck::failed("implicit_residual", format!("at {:?}: {e}", xs[i])));
        return Ok(report);
    }
    let ys: Vec<Vec<f64>> = solved.into_iter().map(|s| s.unwrap()).collect();

    let res = xs
        .par_iter()
        .zip(&ys)
        .map(|(x, y)| -> Result<Worst> {
            let mut w = Worst::max();
            w.offer(norm(&f.value(&joined(x, y))?), x);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    report.push(PropertyCheck::at_most("implicit_residual", res.value, 1e-10, xs.len(), res.witness));

    let mut lip = Worst::max();
    for i in 0..xs.len() {
        for j in [(i + 1) % xs.len(), (i * 7 + 3) % xs.len()] {
            let d = dist(&xs[i], &xs[j]);
            if d > 0.0 {
                lip.offer(dist(&ys[i], &ys[j]) / d, &[xs[i].as_slice(), xs[j].as_slice()].concat());
            }
        }
    }
    report.push(PropertyCheck::at_most("lipschitz_g", lip.value, cert.lip_g * (1.0 + 1e-9), 2 * xs.len(), lip.witness));

    // points lie in B_{ρ/2}; third-order stencils reach 3h ≤ ρ/4 further
    let g = FiniteDifferenceOracle::new(m, n, 3, |x: &[f64]| solve_implicit(f, cert, x)).with_max_step(cert.rho / 12.0);
    let inner = sampling::sample_ball(opts.seed, 2, &cert.x0, cert.rho * 0.5, opts.derivative_samples);
    let deriv = inner
        .par_iter()
        .map(|x| -> Result<Worst> {
            let y = solve_implicit(f, cert, x)?;
            let formula = implicit_derivative(f, x, &y)?;
            let fd = g.jacobian(x)?;
            let mut w = Worst::max();
            w.offer(fd.sub(&formula).frobenius_norm() / formula.frobenius_norm().max(1.0), x);
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)));
    report.push(match deriv {
        Ok(w) => PropertyCheck::at_most("derivative_formula", w.value, 1e-6, inner.len(), w.witness)
            .with_note("relative to max(‖Dg‖_F, 1)"),
        Err(e) => PropertyCheck::failed("derivative_formula", e.to_string()),
    });

    if let Some(bound) = cert.ck_g {
        let k = cert.k.min(3);
        let pts = sampling::sample_ball(opts.seed, 3, &cert.x0, cert.rho * 0.5, opts.ck_samples);
        let ck = pts
            .par_iter()
            .map(|x| -> Result<Worst> {
                let mut w = Worst::max();
                w.offer(pointwise_ck_norm(&g, x, k)?, x);
                Ok(w)
            })
            .try_reduce(Worst::max, |a, b| Ok(a.merge(b)));
        report.push(match ck {
            Ok(w) => PropertyCheck::at_most("ck_g", w.value, bound, pts.len(), w.witness)
                .with_note(format!("finite differences up to order {k}")),
            Err(e) => PropertyCheck::failed("ck_g", e.to_string()),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{estimate_ck_norm, parse_polynomial_map, Ball};
    use approx::assert_relative_eq;

    fn certified(k: f64, n: usize) -> CkNormBound<f64> {
        CkNormBound::certified(k, 2, Ball::new(vec![0.0; n], 1.0).unwrap()).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_relative_eq!(implicit_delta(0.0, 1.0).unwrap(), 1.0 / (2.0 * 2f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(implicit_delta(1.0, 1.0).unwrap(), 1.0 / (2.0 * 5f64.sqrt()), max_relative = 1e-15);
        assert!(implicit_delta(2.0, 1.0).unwrap() < implicit_delta(1.0, 1.0).unwrap());
        assert!(implicit_delta(1.0, 0.0).is_err());
        assert!((implicit_delta(1.0f32, 1.0f32).unwrap() - 0.2236068).abs() < 1e-6);
    }

    #[test]
    fn linear_example() {
        // F(x, y) = y − x
        let f = parse_polynomial_map::<f64>("x2 - x1", 2).unwrap();
        let c = smooth_implicit_certificate(&f, &[0.0], &[0.0], &certified(1.0, 2), 2).unwrap();
        let d = 1.0 / (2.0 * 5f64.sqrt());
        assert_relative_eq!(c.delta, d, max_relative = 1e-15);
        assert_relative_eq!(c.r, d, max_relative = 1e-15);
        assert_relative_eq!(c.rho, d * d / 4.0, max_relative = 1e-15);
        assert_eq!(c.lip_g, 1.0 / c.delta);
        let y = solve_implicit(&f, &c, &[c.rho / 2.0]).unwrap();
        assert_relative_eq!(y[0], c.rho / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn circle_example() {
        let f = parse_polynomial_map::<f64>("x1^2 + x2^2 - 1", 2).unwrap();
        let kb = estimate_ck_norm(&f, &Ball::new(vec![0.0, 1.0], 0.5).unwrap(), 2, 21).unwrap();
        let c = smooth_implicit_certificate(&f, &[0.0], &[1.0], &kb, 2).unwrap();
        let k = kb.value;
        assert_relative_eq!(c.delta, 1.0 / (2.0 * (1.0 + (1.0 + k).powi(2) / 4.0).sqrt()), max_relative = 1e-14);
        assert_eq!(solve_implicit(&f, &c, &[0.0]).unwrap(), vec![1.0]);
        let x = c.rho * 0.9;
        assert_relative_eq!(solve_implicit(&f, &c, &[x]).unwrap()[0], (1.0 - x * x).sqrt(), max_relative = 1e-14);
        // x = 0.1 is outside ρ; the unchecked continuation reaches it
        assert!(matches!(solve_implicit(&f, &c, &[0.1]), Err(Error::OutsideCertifiedBall { .. })));
        let y = continue_implicit(&f, &[0.0], &[1.0], &[0.1]).unwrap()[0];
        assert_relative_eq!(y, 0.99f64.sqrt(), max_relative = 1e-14);
        assert!((0.01 + y * y - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cubic_example_matches_bracketing() {
        let f = parse_polynomial_map::<f64>("x2^3 + x2 - x1", 2).unwrap();
        let y = continue_implicit(&f, &[0.0], &[0.0], &[0.2]).unwrap()[0];
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) + mid - 0.2 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_relative_eq!(y, lo, max_relative = 1e-13);
        assert!((y - 0.192_83).abs() < 1e-5);
    }

    #[test]
    fn trivial_and_refusals() {
        let f = parse_polynomial_map::<f64>("x2", 2).unwrap();
        let c = smooth_implicit_certificate(&f, &[0.0], &[0.0], &certified(1.0, 2), 2).unwrap();
        assert_eq!(solve_implicit(&f, &c, &[c.rho]).unwrap(), vec![0.0]);
        assert!(matches!(
            smooth_implicit_certificate(&f, &[0.0], &[0.5], &certified(1.0, 2), 2),
            Err(Error::NotOnZeroSet { .. })
        ));
        let g = parse_polynomial_map::<f64>("x2^2 - x1", 2).unwrap();
        assert!(matches!(
            smooth_implicit_certificate(&g, &[0.0], &[0.0], &certified(2.0, 2), 2),
            Err(Error::SingularPartial { .. })
        ));
    }

    #[test]
    fn verification_on_a_system() {
        let f = parse_polynomial_map::<f64>("x2 + x3^2/2 - x1; x3 - x2*x1/3 + x1^2", 3).unwrap();
        let kb = estimate_ck_norm(&f, &Ball::new(vec![0.0; 3], 1.0).unwrap(), 2, 11).unwrap();
        let c = smooth_implicit_certificate(&f, &[0.0], &[0.0, 0.0], &kb, 2).unwrap();
        let opts = ImplicitVerifyOptions { points: 200, derivative_samples: 10, ck_samples: 5, seed: 5 };
        let rep = verify_implicit(&f, &c, &opts).unwrap();
        assert!(rep.all_passed(), "{rep:#?}");
    }
}
