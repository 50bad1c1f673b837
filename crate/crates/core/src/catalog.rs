//! Named polynomial examples shared by the acceptance tests and the CLI.

use serde::Serialize;

use crate::error::Result;
use crate::jets::{estimate_ck_norm, parse_polynomial_map, Ball, CkNormBound, PolynomialMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Inverse,
    Implicit,
    Rank,
    Split,
    Openness,
    Density,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: Kind,
    /// Semicolon-separated components in `x1 … xn`.
    pub expr: &'static str,
    pub n: usize,
    /// Base point (`x₀`, or `(x₀, y₀)` for implicit entries).
    pub at: &'static [f64],
    /// Implicit: number of parameters `m`. Rank: the rank `p`. Otherwise 0.
    pub param: usize,
    /// Smoothness order used for the `C^k` bound.
    pub k: usize,
}

const fn e(name: &'static str, kind: Kind, expr: &'static str, n: usize, at: &'static [f64], param: usize, k: usize) -> CatalogEntry {
    CatalogEntry { name, kind, expr, n, at, param, k }
}

use Kind::*;

pub static CATALOG: &[CatalogEntry] = &[
    e("inv-cubic", Inverse, "x1 + x1^3", 1, &[0.0], 0, 2),
    e("inv-quadratic", Inverse, "2*x1 - x1^2", 1, &[0.0], 0, 2),
    e("inv-quartic", Inverse, "x1 + 0.5*x1^4", 1, &[0.3], 0, 3),
    e("inv-fold-free", Inverse, "x1 + x2^2; x2 - x1*x2", 2, &[0.0, 0.0], 0, 2),
    e("inv-rotation", Inverse, "x2; -x1 + 1.4*x2^2", 2, &[0.0, 0.0], 0, 2),
    e("inv-cubic-pair", Inverse, "x1 + x2^3; x2 + x1^3", 2, &[0.0, 0.0], 0, 2),
    e("inv-shear", Inverse, "x1 + 2*x2 + x1*x2; x2 - x1^2", 2, &[0.0, 0.0], 0, 2),
    e("inv-offset", Inverse, "x1^2 + x2; x1 - x2^2", 2, &[1.0, 0.5], 0, 2),
    e("inv-bilinear-3d", Inverse, "x1 + x2*x3; x2 + x1*x3; x3 + x1*x2", 3, &[0.0, 0.0, 0.0], 0, 2),
    e("inv-quartic-3d", Inverse, "x1 + 0.1*x2^4; x2 - x3^2; 2*x3 + x1^3", 3, &[0.0, 0.0, 0.0], 0, 3),
    e("imp-circle", Implicit, "x1^2 + x2^2 - 1", 2, &[0.6, 0.8], 1, 2),
    e("imp-cubic", Implicit, "x2^3 + x2 - x1", 2, &[0.0, 0.0], 1, 2),
    e("imp-parabola", Implicit, "x2 - x1^2", 2, &[0.5, 0.25], 1, 2),
    e("imp-system", Implicit, "x2 + x3^2/2 - x1; x3 - x2*x1/3 + x1^2", 3, &[0.0, 0.0, 0.0], 1, 2),
    e("imp-two-params", Implicit, "x3 + x1*x2 + x3^3", 3, &[0.0, 0.0, 0.0], 2, 2),
    e("imp-coupled", Implicit, "2*x2 + x3 - x1^2; x2 - 3*x3 + x1*x2*x3", 3, &[0.0, 0.0, 0.0], 1, 2),
    e("rank-projection", Rank, "x1; 0", 2, &[0.0, 0.0], 1, 2),
    e("rank-parabola", Rank, "x1; x1^2", 2, &[0.0, 0.0], 1, 2),
    e("rank-sum", Rank, "x1 + x2; (x1 + x2)^2", 2, &[0.0, 0.0], 1, 2),
    e("rank-pivoted", Rank, "x2^2; x2 + x2^3", 2, &[0.0, 0.0], 1, 3),
    e("rank-immersion", Rank, "x1; x2; x1*x2", 2, &[0.0, 0.0], 2, 2),
    e("rank-folded-3d", Rank, "x1 + x3^2; x2; x2^2 + x1 + x3^2", 3, &[0.0, 0.0, 0.0], 2, 2),
    e("rank-submersion", Rank, "x1 + x2^2 + x3", 3, &[0.0, 0.0, 0.0], 1, 2),
    e("split-square", Split, "x1^2", 1, &[0.0], 0, 3),
    e("split-morse-cubic", Split, "x1^2 + x1^3", 1, &[0.0], 0, 3),
    e("split-cusp", Split, "x1^2 + x2^3", 2, &[0.0, 0.0], 0, 3),
    e("split-saddle-quartic", Split, "x1^2 - x2^2 + x2^4", 2, &[0.0, 0.0], 0, 3),
    e("split-coupled", Split, "x1^2 + x1*x2^2 + x2^3 + x1^3", 2, &[0.0, 0.0], 0, 3),
    e("split-3d-mixed", Split, "x1^2 - x2^2 + x3^3 + x1*x3^2", 3, &[0.0, 0.0, 0.0], 0, 3),
    e("split-3d-rotated", Split, "x1^2 + x1*x2 + x2^2 + x3^4", 3, &[0.0, 0.0, 0.0], 0, 3),
    e("split-3d-hyperbolic", Split, "x1*x2 + x3^3", 3, &[0.0, 0.0, 0.0], 0, 3),
    e("split-3d-morse", Split, "x1^2 + x2^2 - x3^2 + x1*x2*x3", 3, &[0.0, 0.0, 0.0], 0, 3),
    e("morse-double-well", Openness, "0.25*x1^4 - 0.5*x1^2", 1, &[], 0, 2),
    e("morse-square", Openness, "x1^2", 1, &[], 0, 2),
    e("morse-tilted-cubic", Openness, "x1^3/3 - x1/4", 1, &[], 0, 2),
    e("morse-cubic-bowl", Openness, "x1^2 + x1^3 + x2^2", 2, &[], 0, 2),
    e("morse-tilted-saddle", Openness, "x1^2 - x2^2 + 0.1*x1", 2, &[], 0, 2),
    e("morse-tilted-well", Openness, "x1^4 - x1^2 + 0.1*x1", 1, &[], 0, 2),
    e("density-cubic", Density, "x1^3/3", 1, &[], 0, 3),
    e("density-monkey", Density, "x1^2*x2", 2, &[], 0, 3),
];

impl CatalogEntry {
    pub fn polynomial(&self) -> Result<PolynomialMap<f64>> {
        parse_polynomial_map(self.expr, self.n)
    }

    /// Sampled `C^k` bound on the unit ball around the base point (the
    /// origin for Morse entries).
    pub fn kbound(&self, grid_density: usize) -> Result<CkNormBound<f64>> {
        let f = self.polynomial()?;
        let center = if self.at.is_empty() { vec![0.0; self.n] } else { self.at.to_vec() };
        estimate_ck_norm(&f, &Ball::new(center, 1.0)?, self.k, grid_density)
    }
}

pub fn entries(kind: Kind) -> impl Iterator<Item = &'static CatalogEntry> {
    CATALOG.iter().filter(move |c| c.kind == kind)
}

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::JetOracle;

    #[test]
    fn every_entry_parses_with_declared_shape() {
        for c in CATALOG {
            let f = c.polynomial().unwrap_or_else(|e| panic!("{}: {e}", c.name));
            assert_eq!(f.dims_in(), c.n, "{}", c.name);
            assert!(c.at.is_empty() || c.at.len() == c.n, "{}", c.name);
            if matches!(c.kind, Kind::Inverse) {
                assert_eq!(f.dims_out(), c.n, "{}", c.name);
            }
        }
        let names: std::collections::BTreeSet<_> = CATALOG.iter().map(|c| c.name).collect();
        assert_eq!(names.len(), CATALOG.len());
    }

    #[test]
    fn catalog_sizes() {
        assert!(entries(Kind::Inverse).count() >= 10);
        assert!(entries(Kind::Implicit).count() >= 6);
        assert!(entries(Kind::Rank).count() >= 5);
        assert!(entries(Kind::Split).count() >= 8);
        assert!(entries(Kind::Openness).count() >= 4);
    }

    #[test]
    fn implicit_bases_lie_on_the_zero_set() {
        for c in entries(Kind::Implicit) {
            let f = c.polynomial().unwrap();
            let v = f.value(c.at).unwrap();
            assert!(v.iter().all(|x| x.abs() < 1e-14), "{}", c.name);
        }
    }
}
