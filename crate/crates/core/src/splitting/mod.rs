//! Triangular diagonalization of symmetric families, the splitting lemma
//! and the Morse lemma (the `p = n` case).

mod chart;
mod family;
mod quadrature;

pub use chart::{
    build_split_chart, ck_phi_bound, normal_form_residual, normal_form_residual_on, split_radii, splitting_delta,
    verify_split, SplitBounds, SplitChart, SplitOptions, SplitRadii, SplitSummary, SplitVerifyOptions,
};
pub use family::{
    diag_delta, diagonalize_family, dq_bounds, signed_cholesky, verify_family, FamilySummary, TriangularFamily,
};
pub use quadrature::gauss_legendre;
