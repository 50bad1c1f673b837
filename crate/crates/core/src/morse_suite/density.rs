//! Density of Morse functions: the entropy bound, the constants
//! `r, γ, d, N, η, ψ₁, ψ₂, ψ₃` and the tilt-plus-bumps perturbation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::{Bump, BumpSum};
use super::critical::{find_critical_points, hessian_spectrum, CriticalPoint};
use crate::error::{Error, Result};
use crate::jets::{CkNormBound, JetOracle, Polynomial, PolynomialMap, SumOracle};
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, ball_grid, dist, norm};
use crate::splitting::splitting_delta;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// `R_k = K/(k−1)!`.
pub fn rk(k_norm: f64, k: usize) -> f64 {
    k_norm / factorial(k - 1)
}

fn entropy_sum(k_norm: f64, n: usize, k: usize) -> f64 {
    let root = rk(k_norm, k).powf(1.0 / k as f64);
    (0..=n).map(|i| k_norm.powi(i as i32) * root.powi((n - i) as i32)).sum()
}

/// `c·Σ_{i=0}^{n} Kⁱ(R_k^{1/k})^{n−i} / r^{n−1+1/k}`: covering number bound
/// for the `γ`-critical values of `Df₀` at resolution `r`, with `γ = r^{1−1/k}`.
pub fn entropy_bound(k_norm: f64, n: usize, k: usize, r: f64, c: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("entropy bound needs 0 < r < 1, got {r}")));
    }
    if k < 3 || n == 0 || !(c > 0.0) || !(k_norm >= 0.0) {
        return Err(Error::InvalidArgument("entropy bound needs k ≥ 3, n ≥ 1, c > 0, K ≥ 0".into()));
    }
    Ok(c * entropy_sum(k_norm, n, k) / r.powf(n as f64 - 1.0 + 1.0 / k as f64))
}

/// Number of balls of radius `r` a greedy pass uses to cover `points`;
/// an upper bound for the minimal covering number of the sampled set.
pub fn greedy_cover_count(points: &[Vec<f64>], r: f64) -> usize {
    let mut centers: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !centers.iter().any(|c| dist(c, p) <= r) {
            centers.push(p);
        }
    }
    centers.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConstants {
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub c: f64,
    #[serde(rename = "Rk")]
    pub rk: f64,
    pub r: f64,
    pub gamma: f64,
    pub d: f64,
    /// `⌈(1 + 2/d)ⁿ⌉`. Integer valued, stored as `f64` because it leaves
    /// the `u64` range once `d` is small.
    #[serde(rename = "N")]
    pub n_cover: f64,
    pub eta1: f64,
    pub eta: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Morse-chart radius `δ(K+ε, γ, n)` entering `ψ₃`.
    pub delta_split: f64,
}

/// Bump radii `(d/4, d/2)` for separation `d`.
pub fn bump_radii(d: f64) -> (f64, f64) {
    (d / 4.0, d / 2.0)
}

/// All constants of the density construction. `bump_c1` overrides the
/// sampled `C^k` norm of the bump profile.
pub fn density_constants(k_norm: f64, n: usize, k: usize, epsilon: f64, c: f64, bump_c1: Option<f64>) -> Result<DensityConstants> {
    if !(epsilon > 0.0) || !(k_norm > 0.0) || !(c > 0.0) || k < 3 || n == 0 {
        return Err(Error::InvalidArgument("density constants need ε > 0, K > 0, c > 0, k ≥ 3, n ≥ 1".into()));
    }
    let rk = rk(k_norm, k);
    let kf = k as f64;
    let cover = (epsilon.powi(n as i32) / (2f64.powi(n as i32) * c * entropy_sum(k_norm, n, k))).powf(kf / (kf - 1.0));
    let r = 0.5 * epsilon.min(1.0).min(rk * epsilon.powi(k as i32) / k_norm.powi(k as i32)).min(cover);
    let gamma = r.powf(1.0 - 1.0 / kf);
    let d = gamma * gamma / (4.0 * k_norm * k_norm);
    let n_cover = (1.0 + 2.0 / d).powi(n as i32).ceil();
    let ke = k_norm + epsilon;
    let eta1 = r.min(gamma * gamma / (8.0 * ke));
    let c1 = match bump_c1 {
        Some(v) => v,
        None => {
            let (a, b) = bump_radii(d);
            Bump::new(vec![0.0; n], a, b, k)?.ck_norm(2000)?
        }
    };
    let delta_split = splitting_delta(ke, gamma.min(ke), n)?;
    Ok(DensityConstants {
        k_norm,
        n,
        k,
        epsilon,
        c,
        rk,
        r,
        gamma,
        d,
        n_cover,
        eta1,
        eta: eta1 / 4.0,
        psi1: gamma,
        psi2: eta1 / (4.0 * n_cover * c1),
        psi3: delta_split.min(gamma * gamma / (8.0 * ke * ke)),
        c1,
        delta_split,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbOptions {
    pub max_tries: usize,
    /// Grid per axis for the admissibility test of `v`; `None` picks by dimension.
    pub search_grid: Option<usize>,
    /// Grid per axis for locating critical points.
    pub critical_grid: Option<usize>,
    /// Grid per axis for the small-gradient clause.
    pub clause_v_grid: usize,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self { max_tries: 10_000, search_grid: None, critical_grid: None, clause_v_grid: 200 }
    }
}

pub(crate) fn default_search_grid(n: usize) -> usize {
    match n {
        1 => 4001,
        2 => 301,
        3 => 61,
        _ => 21,
    }
}

pub(crate) fn default_critical_grid(n: usize) -> usize {
    match n {
        1 => 401,
        2 => 101,
        3 => 31,
        _ => 13,
    }
}

/// `h = l + λ` with `Dl = −v` and `λ = Σ cᵢ·bump(x − xᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorsePerturbation {
    pub tilt: Vec<f64>,
    pub bump_inner: f64,
    pub bump_outer: f64,
    pub centers: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub constants: DensityConstants,
    /// Candidates of `v` examined, including the accepted one.
    pub tries: usize,
    /// `‖v‖ + maxᵢ cᵢ·C₁`.
    pub h_norm: f64,
    pub critical_points: Vec<CriticalPoint>,
}

pub type PerturbedOracle<'a, O> = SumOracle<SumOracle<&'a O, PolynomialMap<f64>>, BumpSum>;

fn tilt_map(v: &[f64]) -> Result<PolynomialMap<f64>> {
    let n = v.len();
    let p = (0..n).fold(Polynomial::zero(n), |acc, i| acc.add(&Polynomial::variable(n, i).scale(-v[i])));
    PolynomialMap::new(n, vec![p])
}

impl MorsePerturbation {
    /// `h` alone.
    pub fn h(&self) -> Result<SumOracle<PolynomialMap<f64>, BumpSum>> {
        Ok(SumOracle { a: tilt_map(&self.tilt)?, b: self.bumps()? })
    }

    fn bumps(&self) -> Result<BumpSum> {
        let k = self.constants.k;
        let bumps = self
            .centers
            .iter()
            .zip(&self.coefficients)
            .map(|(c, &w)| Ok((Bump::new(c.clone(), self.bump_inner, self.bump_outer, k)?, w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BumpSum::new(self.tilt.len(), k, bumps))
    }

    /// `f₀ + h`.
    pub fn apply<'a, O: JetOracle<f64> + ?Sized>(&self, f0: &'a O) -> Result<PerturbedOracle<'a, O>> {
        Ok(SumOracle { a: SumOracle { a: f0, b: tilt_map(&self.tilt)? }, b: self.bumps()? })
    }
}

struct GridSample {
    grad: Vec<f64>,
    sigma: f64,
}

/// Finds `h` with `‖h‖_{C^k} < ε` such that `f₀ + h` is Morse with the
/// separation properties of the density construction, and reports on them.
///
/// Candidates for `v` are `0` followed by seeded uniform draws from
/// `B_{ε−r/2}`. A candidate is admissible when the sampled minimum of
/// `σ_n(Hf₀)` over `{‖Df₀ − v‖ ≤ γ/2}` exceeds `γ` and the critical points of
/// `f₀ − ⟨v, x⟩` found on the grid satisfy `σ_n ≥ γ` and are `d` apart.
pub fn perturb_to_morse<O: JetOracle<f64> + ?Sized>(
    f0: &O,
    kbound: &CkNormBound<f64>,
    epsilon: f64,
    c: f64,
    seed: u64,
    opts: &PerturbOptions,
) -> Result<(MorsePerturbation, VerificationReport)> {
    let n = f0.dims_in();
    let k = kbound.order;
    let consts = density_constants(kbound.value, n, k, epsilon, c, None)?;
    let search_grid = opts.search_grid.unwrap_or_else(|| default_search_grid(n));
    let critical_grid = opts.critical_grid.unwrap_or_else(|| default_critical_grid(n));
    let dedup = consts.d / 4.0;

    let samples = ball_grid(&vec![0.0; n], 1.0, search_grid)
        .par_iter()
        .map(|x| {
            let grad = f0.gradient(x)?;
            let sigma = hessian_spectrum(&f0.hessian(x, 0)?).0;
            Ok(GridSample { grad, sigma })
        })
        .collect::<Result<Vec<_>>>()?;
    let radius = epsilon - consts.r / 2.0;
    let candidate = |j: usize| -> Vec<f64> {
        if j == 0 {
            vec![0.0; n]
        } else {
            sampling::uniform_in_ball(&mut sampling::rng(seed, j as u64), &vec![0.0; n], radius)
        }
    };
    let cheap = |v: &[f64]| -> bool {
        samples
            .iter()
            .filter(|s| dist(&s.grad, v) <= consts.gamma / 2.0)
            .all(|s| s.sigma > consts.gamma)
    };

    let mut accepted: Option<(usize, Vec<f64>, Vec<CriticalPoint>)> = None;
    let batch = 32;
    let mut start = 0;
    'search: while start < opts.max_tries {
        let end = (start + batch).min(opts.max_tries);
        let passing: Vec<(usize, Vec<f64>)> = (start..end)
            .into_par_iter()
            .map(|j| (j, candidate(j)))
            .filter(|(_, v)| cheap(v))
            .collect();
        for (j, v) in passing {
            let f1 = SumOracle { a: f0, b: tilt_map(&v)? };
            let cps = find_critical_points(&f1, critical_grid, dedup)?;
            let separated = cps
                .iter()
                .enumerate()
                .all(|(i, a)| cps[i + 1..].iter().all(|b| dist(&a.location, &b.location) >= consts.d));
            if separated && cps.iter().all(|p| p.hessian_sigma_n >= consts.gamma) {
                accepted = Some((j, v, cps));
                break 'search;
            }
        }
        start = end;
    }
    let (j, v, mut cps) = accepted.ok_or(Error::SearchExhausted { tries: opts.max_tries })?;

    cps.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal));
    let step = consts.eta1 / (4.0 * consts.n_cover * consts.c1);
    let coefficients: Vec<f64> = (0..cps.len()).map(|i| i as f64 * step).collect();
    let (inner, outer) = bump_radii(consts.d);
    let max_c = coefficients.iter().copied().fold(0.0, f64::max);
    let mut pert = MorsePerturbation {
        tilt: v.clone(),
        bump_inner: inner,
        bump_outer: outer,
        centers: cps.iter().map(|p| p.location.clone()).collect(),
        coefficients,
        h_norm: norm(&v) + max_c * consts.c1,
        constants: consts.clone(),
        tries: j + 1,
        critical_points: Vec::new(),
    };
    let f = pert.apply(f0)?;
    let found = find_critical_points(&f, critical_grid, dedup)?;
    pert.critical_points = found;
    let report = density_report(&f, &pert, opts)?;
    Ok((pert, report))
}

/// Clauses (i), (ii), (iii) and (v) of the density construction on `f`,
/// plus the norm of `h` and the covering side condition.
pub fn density_report<O: JetOracle<f64> + ?Sized>(f: &O, pert: &MorsePerturbation, opts: &PerturbOptions) -> Result<VerificationReport> {
    let c = &pert.constants;
    let cps = &pert.critical_points;
    let n = f.dims_in();
    let mut report = VerificationReport::default();
    report.push(PropertyCheck::at_most("h_norm", pert.h_norm, c.epsilon, 1, None));

    let mut sig = Worst::min();
    for p in cps {
        sig.offer(p.hessian_sigma_n, &p.location);
    }
    report.push(PropertyCheck::at_least("hessian_sigma_n", sig.value, c.psi1, cps.len(), sig.witness));

    let mut sep = Worst::min();
    let mut gap = Worst::min();
    for (i, a) in cps.iter().enumerate() {
        for b in &cps[i + 1..] {
            sep.offer(dist(&a.location, &b.location), &a.location);
            gap.offer((a.value - b.value).abs(), &a.location);
        }
    }
    let pairs = cps.len() * cps.len().saturating_sub(1) / 2;
    report.push(PropertyCheck::at_least("point_separation", sep.value, c.d, pairs, sep.witness));
    report.push(PropertyCheck::at_most("critical_count", cps.len() as f64, c.n_cover, 1, None));
    report.push(PropertyCheck::at_least("value_separation", gap.value, c.psi2, pairs, gap.witness));

    let grid = ball_grid(&vec![0.0; n], 1.0, opts.clause_v_grid);
    let small = grid
        .par_iter()
        .map(|x| -> Result<Worst> {
            let mut w = Worst::max();
            if norm(&f.gradient(x)?) <= c.eta {
                let d = cps.iter().map(|p| dist(x, &p.location)).fold(f64::INFINITY, f64::min);
                w.offer(d, x);
            }
            Ok(w)
        })
        .try_reduce(Worst::max, |a, b| Ok(a.merge(b)))?;
    let observed = if small.witness.is_none() { 0.0 } else { small.value };
    report.push(
        PropertyCheck::at_most("small_gradient", observed, c.psi3, grid.len(), small.witness)
            .with_note(format!("distance to Σ(f) of grid points with ‖Df‖ ≤ η = {:e}", c.eta)),
    );

    let side = entropy_bound(c.k_norm, n, c.k, c.r, c.c)? * (2.0 * c.r).powi(n as i32);
    report.push(
        PropertyCheck::at_most("covering_side_condition", side, c.epsilon.powi(n as i32), 1, None)
            .with_note("M(r, Δ)·(2r)ⁿ against εⁿ"),
    );
    Ok(report)
}
