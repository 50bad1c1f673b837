//! Density and openness of Morse functions on the closed unit ball.

mod bump;
mod critical;
mod density;
mod openness;

pub use bump::{smoothstep_coefficients, Bump, BumpSum};
pub use critical::{find_critical_points, CriticalPoint};
pub use density::{
    bump_radii, density_constants, density_report, entropy_bound, greedy_cover_count, perturb_to_morse, rk,
    DensityConstants, MorsePerturbation, PerturbOptions, PerturbedOracle,
};
pub use openness::{
    ck_distance, eta_lower_bound, openness_certificate, random_perturbation, verify_openness, EtaOptions,
    MorseCertificate, OpennessVerifyOptions,
};
