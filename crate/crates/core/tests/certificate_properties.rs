mod common;

use proptest::prelude::*;
use singcert::certified_implicit::{smooth_implicit_certificate, verify_implicit, ImplicitVerifyOptions};
use singcert::certified_inverse::{smooth_inverse_certificate, verify_inverse, InverseVerifyOptions};
use singcert::jets::{estimate_ck_norm, parse_polynomial_map, Ball, CkNormBound, Polynomial, PolynomialMap};
use singcert::rank_charts::{rank_certificate, verify_rank, RankVerifyOptions, StraighteningCharts};
use singcert::spectral::Matrix;
use singcert::splitting::{
    build_split_chart, diagonalize_family, normal_form_residual, split_radii, splitting_delta, verify_family, SplitOptions,
};

use common::{matrix, monomials, poly_map, polynomial};

fn sampled(f: &PolynomialMap<f64>, k: usize) -> CkNormBound<f64> {
    let n = f.dims_in();
    let grid = [0, 101, 25, 11, 7][n.min(4)];
    estimate_ck_norm(f, &Ball::new(vec![0.0; n], 1.0).unwrap(), k, grid).unwrap()
}

/// `A·x + h(x)` with `h` of degree 2..3.
fn near_linear(a: &Matrix<f64>, h: &PolynomialMap<f64>) -> PolynomialMap<f64> {
    let n = a.rows();
    let comps = (0..n)
        .map(|i| {
            let lin = (0..n).fold(Polynomial::zero(n), |acc, j| acc.add(&Polynomial::variable(n, j).scale(a[(i, j)])));
            lin.add(&h.components()[i])
        })
        .collect();
    PolynomialMap::new(n, comps).unwrap()
}

fn inverse_case() -> impl Strategy<Value = PolynomialMap<f64>> {
    (1usize..4).prop_flat_map(|n| (matrix(n), poly_map(n, n, 2, 3, 0.5))).prop_map(|(a, h)| {
        let n = a.rows();
        near_linear(&a.add(&Matrix::identity(n).scale(2.0)), &h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Injectivity modulus, inversion, derivative variation and the sampled
    /// `C^k` norm of the inverse against `EI`.
    #[test]
    fn inverse_certificates_verify(f in inverse_case()) {
        let n = f.dims_in();
        let kb = sampled(&f, 2);
        let cert = match smooth_inverse_certificate(&f, &vec![0.0; n], &kb, 2) {
            Ok(c) => c,
            Err(singcert::Error::SingularJacobian { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(cert.rho1, cert.r * cert.delta / (2.0 * cert.k_norm));
        prop_assert_eq!(cert.rho2, cert.r * cert.delta / 2.0);
        prop_assert_eq!(cert.lip_inverse, 1.0 / cert.delta);
        let opts = InverseVerifyOptions { pairs: 400, targets: 100, jacobian_samples: 100, ck_samples: 8, seed: 1 };
        let rep = verify_inverse(&f, &cert, &opts).unwrap();
        prop_assert!(rep.all_passed(), "{:#?}", rep.failures().collect::<Vec<_>>());
    }

    #[test]
    fn implicit_certificates_verify(
        c in prop::collection::vec(0.5..2.0f64, 2),
        b in prop::collection::vec(-1.0..1.0f64, 2),
        h in poly_map(3, 2, 2, 2, 0.4),
    ) {
        // F(x, y) = C·y + b·x + h(x, y) with x ∈ ℝ, y ∈ ℝ²
        let mut comps = Vec::new();
        for i in 0..2 {
            let lin = Polynomial::variable(3, 1 + i).scale(c[i]).add(&Polynomial::variable(3, 0).scale(b[i]));
            comps.push(lin.add(&h.components()[i]));
        }
        let f = PolynomialMap::new(3, comps).unwrap();
        let kb = sampled(&f, 2);
        let cert = smooth_implicit_certificate(&f, &[0.0], &[0.0, 0.0], &kb, 2).unwrap();
        prop_assert_eq!(cert.rho, cert.r * cert.delta / (2.0 * (cert.k_norm + 1.0)));
        prop_assert_eq!(cert.lip_g, cert.k_norm / cert.delta);
        let rep = verify_implicit(&f, &cert, &ImplicitVerifyOptions { points: 100, derivative_samples: 10, ck_samples: 4, seed: 2 }).unwrap();
        prop_assert!(rep.all_passed(), "{:#?}", rep.failures().collect::<Vec<_>>());
    }

    /// `(u, q(u))` with `u = a·x + small quadratic` has rank one everywhere
    /// near the origin.
    #[test]
    fn rank_one_charts_verify(
        a in prop::collection::vec(0.5..2.0f64, 2),
        h in poly_map(2, 1, 2, 2, 0.2),
        q in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let u = Polynomial::variable(2, 0).scale(a[0]).add(&Polynomial::variable(2, 1).scale(a[1])).add(&h.components()[0]);
        let second = u.scale(q[0]).add(&u.pow(2).scale(q[1]));
        let f = PolynomialMap::new(2, vec![u, second]).unwrap();
        let kb = sampled(&f, 2);
        let cert = rank_certificate(&f, &[0.0, 0.0], 1, &kb, 2).unwrap();
        prop_assert_eq!(cert.rho1, cert.r * cert.delta / (2.0 * (cert.k_norm + 1.0)));
        prop_assert_eq!(cert.rho2, cert.r * cert.delta / 2.0);
        prop_assert!(cert.p <= 2);
        let charts = StraighteningCharts::new(&f, cert).unwrap();
        let rep = verify_rank(&charts, &RankVerifyOptions { samples: 100, pairs: 100, seed: 3 }).unwrap();
        prop_assert!(rep.all_passed(), "{:#?}", rep.failures().collect::<Vec<_>>());
    }

    /// `B̄(x) = D₀ + S(x)` with symmetric `S(0) = 0` factors as `QᵀD₀Q`
    /// on `B_{δ}`, with `Q(0) = I`.
    #[test]
    fn families_reconstruct(
        n in 1usize..5,
        signs in prop::collection::vec(prop::bool::ANY, 4),
        coeffs in prop::collection::vec(-1.0..1.0f64, 4 * 4 * 9),
    ) {
        let vars = 2;
        let exps = monomials(vars, 1, 2);
        let mut comps = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i.min(j), i.max(j));
                let off = (a * 4 + b) * exps.len();
                let mut p = polynomial(vars, &exps, &coeffs[off..off + exps.len()]);
                if i == j {
                    p = p.add(&Polynomial::constant(vars, if signs[i] { 1.0 } else { -1.0 }));
                }
                comps.push(p);
            }
        }
        let b = PolynomialMap::new(vars, comps).unwrap();
        let kbar = sampled(&b, 2).value;
        let fam = diagonalize_family(&b, kbar, n, 2).unwrap();
        let rep = verify_family(&fam, 200, 5).unwrap();
        for name in ["q_at_origin", "reconstruction", "upper_triangular_positive"] {
            prop_assert!(rep.get(name).unwrap().passed, "{:?}", rep.get(name));
        }
    }

    #[test]
    fn splitting_radius_is_monotone(k in 1.0..20.0f64, t in 0.05..1.0f64, dk in 0.0..5.0f64, p in 1usize..5) {
        let s = t * k;
        let d = splitting_delta(k, s, p).unwrap();
        prop_assert!(d > 0.0);
        prop_assert!(splitting_delta(k + dk, s, p).unwrap() <= d);
        prop_assert!(splitting_delta(k, s, p + 1).unwrap() <= d);
        prop_assert!(splitting_delta(k, (s * 1.1).min(k), p).unwrap() >= d);
        let r = split_radii(k, s, p).unwrap();
        prop_assert_eq!(r.theorem, d);
        prop_assert!(r.internal > 0.0 && r.internal <= r.delta2);
    }

    /// Morse charts of `Σ sᵢλᵢxᵢ² + cubic` reproduce the quadratic form.
    #[test]
    fn morse_charts_are_exact(
        n in 1usize..3,
        lambdas in prop::collection::vec(0.5..2.0f64, 2),
        signs in prop::collection::vec(prop::bool::ANY, 2),
        cubic in prop::collection::vec(-1.0..1.0f64, 10),
    ) {
        let exps = monomials(n, 3, 3);
        let mut f = polynomial(n, &exps, &cubic[..exps.len()]);
        for i in 0..n {
            let s = if signs[i] { lambdas[i] } else { -lambdas[i] };
            f = f.add(&Polynomial::variable(n, i).pow(2).scale(s));
        }
        let f = PolynomialMap::new(n, vec![f]).unwrap();
        let kb = sampled(&f, 3);
        let chart = build_split_chart(&f, &vec![0.0; n], &kb, 3, &SplitOptions::default()).unwrap();
        prop_assert_eq!(chart.p(), n);
        prop_assert_eq!(chart.signs().iter().filter(|&&s| s < 0.0).count(), signs[..n].iter().filter(|&&s| !s).count());
        prop_assert!(chart.domain_radius() >= chart.delta());
        let res = normal_form_residual(&chart, 50, 6).unwrap();
        prop_assert!(res <= 1e-9, "residual {res}");
    }
}

#[test]
fn understated_bound_is_caught_by_verification() {
    let f = parse_polynomial_map::<f64>("x1 + x1^3", 1).unwrap();
    let kb = CkNormBound::certified(0.5, 2, Ball::new(vec![0.0], 100.0).unwrap()).unwrap();
    let cert = smooth_inverse_certificate(&f, &[0.0], &kb, 2).unwrap();
    let rep = verify_inverse(&f, &cert, &InverseVerifyOptions { pairs: 100, targets: 50, jacobian_samples: 200, ck_samples: 4, seed: 0 }).unwrap();
    assert!(!rep.get("derivative_variation").unwrap().passed);
}
