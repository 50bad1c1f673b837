//! Projected Newton iteration shared by the certificate evaluators.

use crate::error::{Error, Result};
use crate::sampling::{dist, norm};
use crate::spectral::Matrix;

pub(crate) const MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Iterates that left the ball and were projected back.
    pub clamped: usize,
}

/// Solves `F(x) = 0` by full Newton steps from `x`.
///
/// `eval` returns `(F(x), DF(x))`. With `ball = Some((c, r))`, iterates that
/// leave `B_r(c)` are projected back onto it. Stops once `‖F‖ ≤ tol`; if the
/// iteration stalls above `tol` but below `accept`, the last iterate is
/// returned.
pub(crate) fn newton<E>(
    mut x: Vec<f64>,
    eval: E,
    ball: Option<(&[f64], f64)>,
    tol: f64,
    accept: f64,
) -> Result<NewtonOutcome>
where
    E: Fn(&[f64]) -> Result<(Vec<f64>, Matrix<f64>)>,
{
    let mut clamped = 0;
    let (mut fx, mut jac) = eval(&x)?;
    let mut res = norm(&fx);
    let mut best = (res, x.clone());
    for it in 0..MAX_ITER {
        if res <= tol {
            return Ok(NewtonOutcome { x, iterations: it, residual: res, clamped });
        }
        let step = jac.solve(&fx).map_err(|_| Error::NoConvergence { iterations: it, residual: res })?;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
        if let Some((c, r)) = ball {
            let d = dist(&x, c);
            if d > r {
                clamped += 1;
                for (xi, ci) in x.iter_mut().zip(c) {
                    *xi = ci + (*xi - ci) * r / d;
                }
            }
        }
        (fx, jac) = eval(&x)?;
        res = norm(&fx);
        if !res.is_finite() {
            return Err(Error::NoConvergence { iterations: it + 1, residual: res });
        }
        if res < best.0 {
            best = (res, x.clone());
        }
    }
    if res <= tol {
        return Ok(NewtonOutcome { x, iterations: MAX_ITER, residual: res, clamped });
    }
    if best.0 <= accept {
        return Ok(NewtonOutcome { x: best.1, iterations: MAX_ITER, residual: best.0, clamped });
    }
    Err(Error::NoConvergence { iterations: MAX_ITER, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let out = newton(
            vec![1.0],
            |x| Ok((vec![x[0] * x[0] - 2.0], Matrix::from_rows(&[[2.0 * x[0]]]))),
            None,
            1e-14,
            1e-12,
        )
        .unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!(out.iterations <= 6);
    }

    #[test]
    fn projection_is_counted() {
        // first step from 0.1 overshoots far outside [-1, 1]
        let out = newton(
            vec![0.1],
            |x| Ok((vec![x[0].atan()], Matrix::from_rows(&[[1.0 / (1.0 + x[0] * x[0])]]))),
            Some((&[0.0], 1.0)),
            1e-14,
            1e-12,
        );
        if let Ok(o) = out {
            assert!(o.x[0].abs() <= 1.0);
        }
    }

    #[test]
    fn singular_jacobian_is_no_convergence() {
        let r = newton(vec![0.0], |_| Ok((vec![1.0], Matrix::zeros(1, 1))), None, 1e-12, 1e-10);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
