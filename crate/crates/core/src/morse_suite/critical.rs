//! Critical-point inventory on the closed unit ball.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::JetOracle;
use crate::newton::newton;
use crate::sampling::{cube_grid, dist, norm};
use crate::spectral::{symmetric_eigen, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    /// `σ_n(Hf(x))`, the smallest absolute Hessian eigenvalue.
    pub hessian_sigma_n: f64,
    /// Number of negative Hessian eigenvalues.
    pub morse_index: usize,
}

impl CriticalPoint {
    /// Classifies `x` without checking that it is critical.
    pub fn at<O: JetOracle<f64> + ?Sized>(f: &O, x: &[f64]) -> Result<Self> {
        let h = f.hessian(x, 0)?;
        let (sigma, index) = hessian_spectrum(&h);
        Ok(Self { location: x.to_vec(), value: f.value(x)?[0], hessian_sigma_n: sigma, morse_index: index })
    }
}

/// `(min |λ|, #{λ < 0})` of a symmetric matrix.
pub(crate) fn hessian_spectrum(h: &Matrix<f64>) -> (f64, usize) {
    let (vals, _) = symmetric_eigen(h);
    let sigma = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    (sigma, vals.iter().filter(|&&v| v < 0.0).count())
}

pub(crate) fn sigma_n_hessian<O: JetOracle<f64> + ?Sized>(f: &O, x: &[f64]) -> Result<f64> {
    Ok(hessian_spectrum(&f.hessian(x, 0)?).0)
}

/// Scans `‖Df‖` on a `grid_density`-per-axis grid of `[−1, 1]ⁿ`, polishes
/// every discrete local minimum by Newton on `Df`, and keeps the limits in
/// the closed unit ball. Points closer than `tol` are merged. Seeds whose
/// Newton run fails are dropped.
pub fn find_critical_points<O: JetOracle<f64> + ?Sized>(f: &O, grid_density: usize, tol: f64) -> Result<Vec<CriticalPoint>> {
    if f.dims_out() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.dims_out() });
    }
    if grid_density < 3 {
        return Err(Error::InvalidArgument("grid_density must be at least 3".into()));
    }
    let n = f.dims_in();
    let grid = cube_grid(&vec![0.0; n], 1.0, grid_density);
    let gnorm = grid.par_iter().map(|x| Ok(norm(&f.gradient(x)?))).collect::<Result<Vec<f64>>>()?;

    let seeds: Vec<usize> = (0..grid.len())
        .into_par_iter()
        .filter(|&i| is_local_min(i, &gnorm, n, grid_density))
        .collect();

    let polished: Vec<Option<Vec<f64>>> = seeds
        .par_iter()
        .map(|&i| {
            newton(
                grid[i].clone(),
                |x| Ok((f.gradient(x)?, f.hessian(x, 0)?)),
                None,
                1e-14,
                1e-10,
            )
            .ok()
            .map(|o| o.x)
            .filter(|x| norm(x) <= 1.0 + 1e-9)
        })
        .collect();

    let mut kept: Vec<Vec<f64>> = Vec::new();
    for x in polished.into_iter().flatten() {
        if kept.iter().all(|k| dist(k, &x) > tol) {
            kept.push(x);
        }
    }
    kept.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    kept.iter().map(|x| CriticalPoint::at(f, x)).collect()
}

/// Ties are broken by flat index so a plateau yields one seed.
fn is_local_min(i: usize, vals: &[f64], n: usize, density: usize) -> bool {
    let mut idx = vec![0usize; n];
    let mut f = i;
    for slot in idx.iter_mut().rev() {
        *slot = f % density;
        f /= density;
    }
    let v = vals[i];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut j = 0usize;
        let mut valid = true;
        for &ix in &idx {
            let off = (c % 3) as isize - 1;
            c /= 3;
            let q = ix as isize + off;
            if q < 0 || q >= density as isize {
                valid = false;
                break;
            }
            j = j * density + q as usize;
        }
        if !valid || j == i {
            continue;
        }
        if vals[j] < v || (vals[j] == v && j < i) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::parse_polynomial_map;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_has_one_minimum() {
        let f = parse_polynomial_map::<f64>("x1^2", 1).unwrap();
        let cps = find_critical_points(&f, 51, 1e-6).unwrap();
        assert_eq!(cps.len(), 1);
        assert_abs_diff_eq!(cps[0].location[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cps[0].hessian_sigma_n, 2.0, epsilon = 1e-12);
        assert_eq!(cps[0].morse_index, 0);
    }

    #[test]
    fn saddle_index_one() {
        let f = parse_polynomial_map::<f64>("x1^2 - x2^2", 2).unwrap();
        let cps = find_critical_points(&f, 21, 1e-6).unwrap();
        assert_eq!(cps.len(), 1);
        assert_eq!(cps[0].morse_index, 1);
    }

    #[test]
    fn double_well() {
        let f = parse_polynomial_map::<f64>("0.25*x1^4 - 0.5*x1^2", 1).unwrap();
        let cps = find_critical_points(&f, 101, 1e-6).unwrap();
        let locs: Vec<f64> = cps.iter().map(|c| c.location[0]).collect();
        let vals: Vec<f64> = cps.iter().map(|c| c.value).collect();
        assert_eq!(locs.len(), 3);
        for (a, b) in locs.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        for (a, b) in vals.iter().zip([-0.25, 0.0, -0.25]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn off_axis_points_in_two_dimensions() {
        // critical points at (±1/2, ±1/2)
        let f = parse_polynomial_map::<f64>("0.3333333333333333*x1^3 - 0.25*x1 + 0.3333333333333333*x2^3 - 0.25*x2", 2).unwrap();
        let cps = find_critical_points(&f, 41, 1e-6).unwrap();
        assert_eq!(cps.len(), 4);
        for c in &cps {
            assert!(c.location.iter().all(|v| (v.abs() - 0.5).abs() < 1e-10));
        }
    }
}
