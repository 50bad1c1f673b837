//! Point sampling helpers: seeded uniform draws in balls and axis grids.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic RNG stream for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform sample from the closed ball `B_radius(center)`.
pub fn uniform_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let u: f64 = rng.gen::<f64>();
    let r = radius * u.powf(1.0 / n as f64);
    center.iter().zip(&dir).map(|(c, d)| c + r * d / norm).collect()
}

/// `count` uniform points of `B_radius(center)` from stream `(seed, stream)`.
pub fn sample_ball(seed: u64, stream: u64, center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed, stream);
    (0..count).map(|_| uniform_in_ball(&mut r, center, radius)).collect()
}

/// Uniform sample from the sphere of radius `radius` around `center`.
pub fn uniform_on_sphere<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..center.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    center.iter().zip(&dir).map(|(c, d)| c + radius * d / norm).collect()
}

/// Tensor grid on the cube `center ± half_width`, `density` points per axis
/// (endpoints included).
pub fn cube_grid(center: &[f64], half_width: f64, density: usize) -> Vec<Vec<f64>> {
    assert!(density >= 2);
    let n = center.len();
    let total = density.pow(n as u32);
    let step = 2.0 * half_width / (density - 1) as f64;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut f = flat;
        for slot in idx.iter_mut().rev() {
            *slot = f % density;
            f /= density;
        }
        out.push(
            idx.iter()
                .zip(center)
                .map(|(&i, &c)| c - half_width + step * i as f64)
                .collect(),
        );
    }
    out
}

/// Grid points of [`cube_grid`] that lie in the closed ball, plus the center.
pub fn ball_grid(center: &[f64], radius: f64, density: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = cube_grid(center, radius, density)
        .into_iter()
        .filter(|p| dist(p, center) <= radius * (1.0 + 1e-12))
        .collect();
    if !pts.iter().any(|p| dist(p, center) == 0.0) {
        pts.push(center.to_vec());
    }
    pts
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_samples_stay_inside() {
        let mut r = rng(3, 0);
        for _ in 0..1000 {
            let p = uniform_in_ball(&mut r, &[1.0, -1.0, 0.5], 0.25);
            assert!(dist(&p, &[1.0, -1.0, 0.5]) <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(cube_grid(&[0.0, 0.0], 1.0, 3).len(), 9);
        // 3x3 grid in unit disc: center plus the four axis points
        assert_eq!(ball_grid(&[0.0, 0.0], 1.0, 3).len(), 5);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: f64 = rng(7, 1).gen();
        let b: f64 = rng(7, 1).gen();
        let c: f64 = rng(7, 2).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
