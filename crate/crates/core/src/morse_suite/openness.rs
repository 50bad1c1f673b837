//! Openness of Morse functions: the radius `ε` within which every `C^k`
//! perturbation keeps the critical-point structure.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::critical::{find_critical_points, sigma_n_hessian, CriticalPoint};
use super::density::default_critical_grid;
use crate::error::{Error, Result};
use crate::jets::{estimate_ck_norm, Ball, CkNormBound, DerivativeTensor, JetOracle, Polynomial, PolynomialMap, Term};
use crate::report::{PropertyCheck, VerificationReport, Worst};
use crate::sampling::{self, ball_grid, dist, norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseCertificate {
    pub critical_points: Vec<CriticalPoint>,
    pub gamma: f64,
    /// Smallest critical-value gap; `None` for a single critical point.
    pub d: Option<f64>,
    pub rho: f64,
    /// Certified lower bound for `inf{‖Df(x)‖ : d(x, Σ) ≥ ρ}`.
    pub eta: f64,
    /// Smallest `‖Df‖` seen at admissible cell centres; `eta ≤ eta_upper`.
    pub eta_upper: f64,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub k: usize,
    /// Cells examined by the `η` search.
    pub eta_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaOptions {
    /// Initial cells per axis on `[−1, 1]ⁿ`.
    pub grid_density: usize,
    /// Stop once the lower bound reaches `(1 − rel_gap)·upper`.
    pub rel_gap: f64,
    pub max_cells: usize,
}

impl Default for EtaOptions {
    fn default() -> Self {
        Self { grid_density: 64, rel_gap: 0.5, max_cells: 2_000_000 }
    }
}

struct Cell {
    center: Vec<f64>,
    half: f64,
    lower: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // min-heap on the lower bound, ties by centre
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lower
            .total_cmp(&self.lower)
            .then_with(|| other.center.partial_cmp(&self.center).unwrap_or(Ordering::Equal))
    }
}

/// Certified lower bound of `inf ‖Df‖` over `{x ∈ B̄ⁿ : d(x, Σ) ≥ ρ}` by
/// cell refinement: on a cube of half-width `w` around `c`,
/// `‖Df‖ ≥ ‖Df(c)‖ − K·w·√n`. Returns `(lower, upper, cells)`.
pub fn eta_lower_bound<O: JetOracle<f64> + ?Sized>(
    f: &O,
    k_norm: f64,
    sigma: &[Vec<f64>],
    rho: f64,
    opts: &EtaOptions,
) -> Result<(f64, f64, usize)> {
    let n = f.dims_in();
    let sq = (n as f64).sqrt();
    let relevant = |c: &[f64], half: f64| -> bool {
        let reach = half * sq;
        norm(c) - reach <= 1.0 && sigma.iter().all(|s| dist(c, s) + reach >= rho)
    };
    let admissible = |c: &[f64]| norm(c) <= 1.0 && sigma.iter().all(|s| dist(c, s) >= rho);
    let make = |c: Vec<f64>, half: f64| -> Result<(Cell, f64)> {
        let g = norm(&f.gradient(&c)?);
        let up = if admissible(&c) { g } else { f64::INFINITY };
        Ok((Cell { lower: g - k_norm * half * sq, center: c, half }, up))
    };

    let m = opts.grid_density.max(1);
    let half0 = 1.0 / m as f64;
    let centers = if m == 1 { vec![vec![0.0; n]] } else { sampling::cube_grid(&vec![0.0; n], 1.0 - half0, m) };
    let initial = centers
        .into_par_iter()
        .filter(|c| relevant(c, half0))
        .map(|c| make(c, half0))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = initial.len();
    let mut upper = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    for (cell, up) in initial {
        upper = upper.min(up);
        heap.push(cell);
    }
    while let Some(top) = heap.peek() {
        if top.lower >= (1.0 - opts.rel_gap) * upper || cells >= opts.max_cells {
            break;
        }
        let cell = heap.pop().expect("peeked");
        let h = cell.half / 2.0;
        let children = (0..1usize << n)
            .into_par_iter()
            .map(|mask| {
                let c: Vec<f64> =
                    cell.center.iter().enumerate().map(|(i, &v)| if mask >> i & 1 == 1 { v + h } else { v - h }).collect();
                c
            })
            .filter(|c| relevant(c, h))
            .map(|c| make(c, h))
            .collect::<Result<Vec<_>>>()?;
        cells += children.len();
        for (child, up) in children {
            upper = upper.min(up);
            heap.push(child);
        }
    }
    let lower = heap.peek().map_or(upper, |c| c.lower.min(upper));
    Ok((lower, upper, cells))
}

/// `γ, d, ρ, η, ε` for a Morse function on `B̄ⁿ` with critical points
/// `points`, which the caller asserts is all of them.
pub fn openness_certificate<O: JetOracle<f64> + ?Sized>(
    f: &O,
    kbound: &CkNormBound<f64>,
    points: &[CriticalPoint],
    eta_opts: &EtaOptions,
) -> Result<MorseCertificate> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("openness certificate needs at least one critical point".into()));
    }
    let k_norm = kbound.value;
    let gamma = points.iter().map(|p| p.hessian_sigma_n).fold(f64::INFINITY, f64::min);
    if !(gamma > 1e-12 * k_norm.max(1.0)) {
        return Err(Error::NonMorse);
    }
    let mut d: Option<f64> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let g = (a.value - b.value).abs();
            d = Some(d.map_or(g, |x: f64| x.min(g)));
        }
    }
    if let Some(g) = d {
        if g <= 1e-12 * k_norm.max(1.0) {
            return Err(Error::DuplicateCriticalValues);
        }
    }
    let to_boundary = 1.0 - points.iter().map(|p| norm(&p.location)).fold(0.0, f64::max);
    if to_boundary <= 0.0 {
        return Err(Error::CriticalLocusNotInterior);
    }
    let rho = (gamma * gamma / (128.0 * k_norm * k_norm)).min(d.map_or(f64::INFINITY, |g| g / (8.0 * k_norm))).min(to_boundary);
    let locs: Vec<Vec<f64>> = points.iter().map(|p| p.location.clone()).collect();
    let (eta, eta_upper, eta_cells) = eta_lower_bound(f, k_norm, &locs, rho, eta_opts)?;
    if !(eta > 0.0) {
        return Err(Error::EtaNotPositive { bound: eta });
    }
    let epsilon = (eta / 2.0).min(gamma * gamma / (64.0 * k_norm)).min(d.map_or(f64::INFINITY, |g| g / 4.0));
    Ok(MorseCertificate {
        critical_points: points.to_vec(),
        gamma,
        d,
        rho,
        eta,
        eta_upper,
        epsilon,
        k_norm,
        k: kbound.order,
        eta_cells,
    })
}

struct Difference<'a, A: ?Sized, B: ?Sized>(&'a A, &'a B);

impl<A: JetOracle<f64> + ?Sized, B: JetOracle<f64> + ?Sized> JetOracle<f64> for Difference<'_, A, B> {
    fn dims_in(&self) -> usize {
        self.0.dims_in()
    }
    fn dims_out(&self) -> usize {
        self.0.dims_out()
    }
    fn max_order(&self) -> usize {
        self.0.max_order().min(self.1.max_order())
    }
    fn eval(&self, point: &[f64], order: usize) -> Result<DerivativeTensor<f64>> {
        let mut t = self.0.eval(point, order)?;
        let u = self.1.eval(point, order)?;
        t.data.iter_mut().zip(&u.data).for_each(|(a, b)| *a -= b);
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpennessVerifyOptions {
    /// Grid per axis for the sampled `‖f̄ − f‖_{C^k}`.
    pub norm_grid: usize,
    /// Grid per axis for locating `Σ(f̄)`; `None` picks by dimension.
    pub critical_grid: Option<usize>,
    /// Grid per axis for clause (i).
    pub clause_grid: usize,
}

impl Default for OpennessVerifyOptions {
    fn default() -> Self {
        Self { norm_grid: 41, critical_grid: None, clause_grid: 101 }
    }
}

/// Sampled `‖f̄ − f‖_{C^k}` on the unit ball.
pub fn ck_distance<A: JetOracle<f64> + ?Sized, B: JetOracle<f64> + ?Sized>(f: &A, fbar: &B, k: usize, grid: usize) -> Result<f64> {
    let ball = Ball::new(vec![0.0; f.dims_in()], 1.0)?;
    Ok(estimate_ck_norm(&Difference(fbar, f), &ball, k, grid)?.value)
}

/// Clauses (i)–(iv) for a perturbation `f̄` of the certified `f`.
pub fn verify_openness<A: JetOracle<f64> + ?Sized, B: JetOracle<f64> + ?Sized>(
    f: &A,
    fbar: &B,
    cert: &MorseCertificate,
    opts: &OpennessVerifyOptions,
) -> Result<VerificationReport> {
    let n = f.dims_in();
    let distance = ck_distance(f, fbar, cert.k, opts.norm_grid)?;
    if distance >= cert.epsilon {
        return Err(Error::PerturbationTooLarge { distance, epsilon: cert.epsilon });
    }
    let mut report = VerificationReport::default();
    report.push(PropertyCheck::at_most("ck_distance", distance, cert.epsilon, 1, None));

    let grid = opts.critical_grid.unwrap_or_else(|| default_critical_grid(n));
    let found = find_critical_points(fbar, grid, cert.rho / 4.0)?;

    let half = cert.gamma / 2.0;
    let pts = ball_grid(&vec![0.0; n], 1.0, opts.clause_grid);
    let mut clause1 = pts
        .par_iter()
        .map(|x| -> Result<Worst> {
            let mut w = Worst::min();
            if norm(&fbar.gradient(x)?) < cert.eta / 2.0 {
                w.offer(sigma_n_hessian(fbar, x)?, x);
            }
            Ok(w)
        })
        .try_reduce(Worst::min, |a, b| Ok(a.merge(b)))?;
    for p in &found {
        clause1.offer(p.hessian_sigma_n, &p.location);
    }
    let observed = if clause1.witness.is_none() { f64::INFINITY } else { clause1.value };
    report.push(PropertyCheck::at_least("small_gradient_nondegenerate", observed, half, pts.len() + found.len(), clause1.witness));

    let p = cert.critical_points.len();
    report.push(
        PropertyCheck::at_most("critical_count_change", (found.len() as f64 - p as f64).abs(), 0.0, 1, None)
            .with_note(format!("{} critical points of f̄, {p} of f", found.len())),
    );
    // one-to-one matching within ρ
    let mut used = vec![false; found.len()];
    let mut worst = Worst::max();
    for cp in &cert.critical_points {
        let best = found
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| (j, dist(&q.location, &cp.location)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, dd)) => {
                used[j] = true;
                worst.offer(dd, &cp.location);
            }
            None => worst.offer(f64::INFINITY, &cp.location),
        }
    }
    report.push(PropertyCheck::at_most("matching_distance", worst.value, cert.rho, p, worst.witness));
    let interior = found.iter().map(|q| norm(&q.location)).fold(0.0, f64::max);
    report.push(PropertyCheck::at_most("interior", interior, 1.0, found.len(), None));

    let mut sig = Worst::min();
    for q in &found {
        sig.offer(q.hessian_sigma_n, &q.location);
    }
    report.push(PropertyCheck::at_least("hessian_sigma_n", sig.value, half, found.len(), sig.witness));

    let mut gap = Worst::min();
    for (i, a) in found.iter().enumerate() {
        for b in &found[i + 1..] {
            gap.offer((a.value - b.value).abs(), &a.location);
        }
    }
    match cert.d {
        Some(d) => report.push(PropertyCheck::at_least("value_gap", gap.value, d / 2.0, found.len(), gap.witness)),
        None => report.push(
            PropertyCheck::at_least("value_gap", f64::INFINITY, 0.0, found.len(), None).with_note("single critical point"),
        ),
    }
    Ok(report)
}

/// Random cubic polynomial in `n` variables without constant term, scaled
/// so its sampled `C^k` norm on the unit ball equals `target`.
pub fn random_perturbation(n: usize, k: usize, target: f64, seed: u64, stream: u64, grid: usize) -> Result<PolynomialMap<f64>> {
    let mut rng = sampling::rng(seed, stream);
    let mut terms = Vec::new();
    let mut e = vec![0u32; n];
    loop {
        let deg: u32 = e.iter().sum();
        if (1..=3).contains(&deg) {
            terms.push(Term { coefficient: rng.sample::<f64, _>(StandardNormal), exponents: e.clone() });
        }
        // odometer over exponents 0..=3
        let mut i = 0;
        while i < n {
            e[i] += 1;
            if e[i] <= 3 {
                break;
            }
            e[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let p = PolynomialMap::new(n, vec![Polynomial::from_terms(n, terms)?])?;
    let ball = Ball::new(vec![0.0; n], 1.0)?;
    let norm = estimate_ck_norm(&p, &ball, k, grid)?.value;
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("degenerate random perturbation".into()));
    }
    let scaled = Polynomial::from_terms(
        n,
        p.components()[0]
            .terms()
            .iter()
            .map(|t| Term { coefficient: t.coefficient * target / norm, exponents: t.exponents.clone() })
            .collect(),
    )?;
    PolynomialMap::new(n, vec![scaled])
}
