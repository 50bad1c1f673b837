use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::JetOracle;
use crate::error::{Error, Result};
use crate::sampling;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball<T> {
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Scalar> Ball<T> {
    pub fn new(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("ball radius must be positive and finite".into()));
        }
        Ok(Self { center, radius })
    }

    /// Whether `B_r(point)` lies inside this ball.
    pub fn contains_ball(&self, point: &[T], r: T) -> bool {
        let d = self
            .center
            .iter()
            .zip(point)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        d + r <= self.radius * (T::one() + lit(1e-12))
    }
}

/// A bound `K ≥ max_{1≤p≤k} sup_ball ‖Dᵖf‖`.
///
/// `certified = false` means the bound was sampled and only holds at the
/// sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkNormBound<T> {
    pub value: T,
    pub order: usize,
    pub ball: Ball<T>,
    pub certified: bool,
}

impl<T: Scalar> CkNormBound<T> {
    /// A bound known analytically by the caller.
    pub fn certified(value: T, order: usize, ball: Ball<T>) -> Result<Self> {
        if !(value >= T::zero()) || order == 0 {
            return Err(Error::InvalidArgument("K must be ≥ 0 and k ≥ 1".into()));
        }
        Ok(Self { value, order, ball, certified: true })
    }

    /// Restriction to a sub-ball. The bound carries over unchanged.
    pub fn restrict(&self, ball: Ball<T>) -> Result<Self> {
        if !self.ball.contains_ball(&ball.center, ball.radius) {
            return Err(Error::DomainTooSmall {
                required: ball.radius.to_f64().unwrap_or(f64::NAN),
                available: self.ball.radius.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { ball, ..self.clone() })
    }
}

/// `max_{1≤p≤k} ‖Dᵖf(x)‖_F` at a single point.
pub fn pointwise_ck_norm<T: Scalar, O: JetOracle<T> + ?Sized>(oracle: &O, x: &[T], k: usize) -> Result<T> {
    let mut best = T::zero();
    for p in 1..=k {
        best = best.max(oracle.eval(x, p)?.frobenius_norm());
    }
    Ok(best)
}

/// Sampled `C^k` norm over a ball: the maximum over a `grid_density`-per-axis
/// grid of the Frobenius norms of `D¹f … Dᵏf`.
pub fn estimate_ck_norm<T: Scalar, O: JetOracle<T> + ?Sized>(
    oracle: &O,
    ball: &Ball<T>,
    k: usize,
    grid_density: usize,
) -> Result<CkNormBound<T>> {
    if k == 0 || k > oracle.max_order() {
        return Err(Error::OrderTooHigh { requested: k, max: oracle.max_order() });
    }
    if grid_density < 2 {
        return Err(Error::InvalidArgument("grid_density must be at least 2".into()));
    }
    if ball.center.len() != oracle.dims_in() {
        return Err(Error::DimensionMismatch { expected: oracle.dims_in(), found: ball.center.len() });
    }
    let center: Vec<f64> = ball.center.iter().map(|v| v.to_f64().unwrap()).collect();
    let pts = sampling::ball_grid(&center, ball.radius.to_f64().unwrap(), grid_density);
    let values = pts
        .par_iter()
        .map(|p| {
            let x: Vec<T> = p.iter().map(|&v| lit(v)).collect();
            pointwise_ck_norm(oracle, &x, k)
        })
        .collect::<Result<Vec<T>>>()?;
    let value = values.into_iter().fold(T::zero(), |a, b| a.max(b));
    Ok(CkNormBound { value, order: k, ball: ball.clone(), certified: false })
}
