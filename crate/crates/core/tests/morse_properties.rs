mod common;

use proptest::prelude::*;
use singcert::jets::{estimate_ck_norm, parse_polynomial_map, Ball, JetOracle, Polynomial, PolynomialMap, SumOracle};
use singcert::morse_suite::{
    ck_distance, density_constants, entropy_bound, eta_lower_bound, find_critical_points, greedy_cover_count,
    random_perturbation, Bump, EtaOptions,
};
use singcert::sampling::{ball_grid, dist, norm};

use common::{monomials, polynomial};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_constant_identities(k_norm in 0.5..10.0f64, n in 1usize..4, k in 3usize..6, eps in 0.01..1.0f64) {
        let c = density_constants(k_norm, n, k, eps, 1.0, Some(3.0)).unwrap();
        prop_assert_eq!(c.gamma, c.r.powf(1.0 - 1.0 / k as f64));
        prop_assert_eq!(c.eta1, c.r.min(c.gamma * c.gamma / (8.0 * (k_norm + eps))));
        prop_assert_eq!(c.eta, c.eta1 / 4.0);
        prop_assert_eq!(c.psi2, c.eta1 / (4.0 * c.n_cover * c.c1));
        prop_assert_eq!(c.psi1, c.gamma);
        prop_assert!(c.r > 0.0 && c.r <= eps / 2.0);
        prop_assert!(c.d > 0.0 && c.psi3 > 0.0);
        prop_assert!(c.n_cover >= (1.0 + 2.0 / c.d).powi(n as i32) && c.n_cover.fract() == 0.0);
    }

    /// Values of `x³/3` on its `γ`-critical set `{x² ≤ γ}`, covered greedily
    /// at resolution `r`, never exceed the entropy bound with `c = 1`.
    #[test]
    fn entropy_bound_dominates_the_cubic_cover(r in 1e-4..0.5f64) {
        let f = parse_polynomial_map::<f64>("x1^3/3", 1).unwrap();
        let k = 3;
        let kn = estimate_ck_norm(&f, &Ball::new(vec![0.0], 1.0).unwrap(), k, 201).unwrap().value;
        let gamma = r.powf(1.0 - 1.0 / k as f64);
        let edge = gamma.sqrt().min(1.0);
        let values: Vec<Vec<f64>> = (0..=4000)
            .map(|i| -edge + 2.0 * edge * i as f64 / 4000.0)
            .map(|x| vec![x * x * x / 3.0])
            .collect();
        let count = greedy_cover_count(&values, r) as f64;
        prop_assert!(count <= entropy_bound(kn, 1, k, r, 1.0).unwrap(), "cover {count}");
    }

    #[test]
    fn bump_plateau_and_support(
        center in prop::collection::vec(-0.5..0.5f64, 2),
        inner in 0.05..0.3f64,
        gap in 0.02..0.3f64,
        probe in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let outer = inner + gap;
        let b = Bump::new(center.clone(), inner, outer, 3).unwrap();
        let v = b.value(&probe).unwrap()[0];
        let d = dist(&probe, &center);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        if d <= inner {
            prop_assert!((v - 1.0).abs() < 1e-12);
        }
        if d >= outer {
            prop_assert_eq!(v, 0.0);
            prop_assert_eq!(b.eval(&probe, 3).unwrap().frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn random_perturbations_have_requested_distance(n in 1usize..3, target in 1e-4..1.0f64, seed in 0u64..1000) {
        let f = parse_polynomial_map::<f64>("x1^2", n).unwrap();
        let p = random_perturbation(n, 2, target, seed, 0, 21).unwrap();
        let fbar = SumOracle { a: &f, b: p };
        let d = ck_distance(&f, &fbar, 2, 21).unwrap();
        prop_assert!((d - target).abs() <= 1e-12 * target.max(1.0));
    }
}

fn morse_case() -> impl Strategy<Value = PolynomialMap<f64>> {
    (1usize..3, prop::collection::vec(0.5..2.0f64, 2), prop::collection::vec(prop::bool::ANY, 2), prop::collection::vec(-0.3..0.3f64, 10))
        .prop_map(|(n, l, s, c)| {
            let exps = monomials(n, 3, 3);
            let mut f = polynomial(n, &exps, &c[..exps.len()]);
            for i in 0..n {
                f = f.add(&Polynomial::variable(n, i).pow(2).scale(if s[i] { l[i] } else { -l[i] }));
            }
            PolynomialMap::new(n, vec![f]).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn critical_points_are_critical(f in morse_case()) {
        let n = f.dims_in();
        let grid = if n == 1 { 201 } else { 61 };
        let cps = find_critical_points(&f, grid, 1e-6).unwrap();
        prop_assert!(!cps.is_empty());
        for cp in &cps {
            prop_assert!(norm(&f.gradient(&cp.location).unwrap()) <= 1e-9);
            prop_assert!(cp.hessian_sigma_n >= 0.0);
            prop_assert!(norm(&cp.location) <= 1.0 + 1e-9);
        }
        for (i, a) in cps.iter().enumerate() {
            for b in &cps[i + 1..] {
                prop_assert!(dist(&a.location, &b.location) > 1e-6);
            }
        }
    }

    /// The certified η never exceeds `‖Df‖` on a dense sample of the
    /// admissible region, and refinement only raises it.
    #[test]
    fn eta_is_a_lower_bound(f in morse_case(), rho in 0.05..0.3f64) {
        let n = f.dims_in();
        let ball = Ball::new(vec![0.0; n], 1.0).unwrap();
        let kn = estimate_ck_norm(&f, &ball, 2, if n == 1 { 201 } else { 61 }).unwrap().value;
        let sigma: Vec<Vec<f64>> = find_critical_points(&f, if n == 1 { 201 } else { 61 }, 1e-6)
            .unwrap()
            .into_iter()
            .map(|c| c.location)
            .collect();
        let coarse = EtaOptions { grid_density: 8, rel_gap: 0.9, max_cells: 100_000 };
        let fine = EtaOptions { grid_density: 8, rel_gap: 0.2, max_cells: 100_000 };
        let (lo, _, _) = eta_lower_bound(&f, kn, &sigma, rho, &coarse).unwrap();
        let (lo_fine, up, _) = eta_lower_bound(&f, kn, &sigma, rho, &fine).unwrap();
        prop_assert!(lo_fine >= lo);
        prop_assert!(lo_fine <= up);
        let sampled = ball_grid(&vec![0.0; n], 1.0, if n == 1 { 4001 } else { 201 })
            .into_iter()
            .filter(|x| sigma.iter().all(|s| dist(x, s) >= rho))
            .map(|x| norm(&f.gradient(&x).unwrap()))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(lo_fine <= sampled * (1.0 + 1e-12), "{lo_fine} > {sampled}");
    }
}
