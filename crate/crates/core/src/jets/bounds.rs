//! Closed-form `C^k` bounds for compositions and inverses.
//!
//! Both functions only use ring operations and comparisons, so they run on
//! floats and on exact rationals alike.

use num_traits::Num;

use crate::scalar::{ring_int, ring_max, ring_pow};

/// `E(K_f, K_g, k) = (1ᵏ + 2ᵏ + … + kᵏ)·K_g·max(K_f, K_fᵏ)`, a bound on
/// `‖g∘f‖_{Cᵏ}` from `‖f‖_{Cᵏ} ≤ K_f` and `‖g‖_{Cᵏ} ≤ K_g`.
pub fn compose_bound<T: Num + PartialOrd + Clone>(kf: T, kg: T, k: u32) -> T {
    let mut sum = T::zero();
    for i in 1..=k {
        sum = sum + ring_pow(&ring_int::<T>(i as u64), k);
    }
    sum * kg * ring_max(kf.clone(), ring_pow(&kf, k))
}

/// `EI(K, L, k)`: bound on `‖φ⁻¹‖_{Cᵏ}` from `‖φ‖_{Cᵏ} ≤ K` and `‖Dφ⁻¹‖ ≤ L`.
///
/// `M₀ = E(K, max_{0≤p≤k−1} p!·L^{p+1}, k−1)`, `M₁ = L`,
/// `M_p = E(M_{p−1}, M₀, p−1)` for `p = 2..k`, and `EI = M_k`.
pub fn inverse_bound<T: Num + PartialOrd + Clone>(k_norm: T, l: T, k: u32) -> T {
    inverse_bound_from(k_norm, l, k, 0)
}

/// Same recurrence with the inner maximum taken over `1 ≤ p ≤ k−1` only.
/// Differs from [`inverse_bound`] only when `L < 1`.
pub fn inverse_bound_narrow<T: Num + PartialOrd + Clone>(k_norm: T, l: T, k: u32) -> T {
    inverse_bound_from(k_norm, l, k, 1)
}

fn inverse_bound_from<T: Num + PartialOrd + Clone>(k_norm: T, l: T, k: u32, p_start: u32) -> T {
    if k <= 1 {
        return l;
    }
    let mut inner: Option<T> = None;
    let mut fact = T::one();
    for p in 0..k {
        if p > 0 {
            fact = fact * ring_int::<T>(p as u64);
        }
        if p < p_start {
            continue;
        }
        let term = fact.clone() * ring_pow(&l, p + 1);
        inner = Some(match inner {
            None => term,
            Some(m) => ring_max(m, term),
        });
    }
    let m0 = compose_bound(k_norm, inner.unwrap_or_else(T::zero), k - 1);
    let mut m = l;
    for p in 2..=k {
        m = compose_bound(m, m0.clone(), p - 1);
    }
    m
}
