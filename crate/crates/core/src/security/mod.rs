//! Analytic security bounds for `N`-dimensional prepare-and-measure QKD.
//!
//! Bob's fidelity `F = 1 − D` follows from the disturbance `D`. Against a
//! symmetric cloning attack Eve's best fidelity is `F_E(F)`; the key survives
//! while Bob knows more about Alice's symbol than Eve does.

mod decoy;
mod keyrate;
mod thresholds;

pub use decoy::{decoy_bounds, gain_and_error, DecoyBounds, Gain};
pub use keyrate::{
    cutoff_distance, entropy_n, key_rate_at, key_rate_vs_distance, mutual_info_curves,
    KeyRateCurve, KeyRateMode, KeyRatePoint, MutualInfoRow, RateParams,
};
pub use thresholds::{
    threshold_coherent, threshold_individual_2mub, threshold_table, ThresholdRow, ThresholdTable,
    TABLE_DIMENSIONS,
};

/// `x·log₂x`, extended continuously by 0 at `x = 0`.
pub(crate) fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn assert_dim(n: usize) {
    assert!(n >= 2, "Hilbert dimension must be at least 2, got {n}");
}

/// Mutual information between Alice and Bob in bits per symbol,
/// `log₂N + F·log₂F + (1−F)·log₂((1−F)/(N−1))`.
///
/// `F` is clamped to `[1/N, 1]`: below `1/N` the outcomes would be
/// anti-correlated, which the symmetric channel model does not describe, and
/// the information is reported as zero.
///
/// Panics if `n < 2`.
pub fn mutual_info_ab(fidelity: f64, n: usize) -> f64 {
    assert_dim(n);
    let nf = n as f64;
    let f = fidelity.clamp(1.0 / nf, 1.0);
    let value = nf.log2() + xlog2x(f) + xlog2x(1.0 - f) - (1.0 - f) * (nf - 1.0).log2();
    value.max(0.0)
}

/// Eve's optimal cloning fidelity given Bob's fidelity `F`:
/// `F/N + (N−1)(1−F)/N + (2/N)·√((N−1)·F·(1−F))`.
pub fn eve_fidelity(fidelity: f64, n: usize) -> f64 {
    assert_dim(n);
    let nf = n as f64;
    let f = fidelity.clamp(0.0, 1.0);
    let fe = f / nf + (nf - 1.0) * (1.0 - f) / nf + 2.0 / nf * ((nf - 1.0) * f * (1.0 - f)).sqrt();
    fe.clamp(0.0, 1.0)
}

/// Eve's information under the individual cloning attack.
pub fn mutual_info_ae(fidelity: f64, n: usize) -> f64 {
    mutual_info_ab(eve_fidelity(fidelity, n), n)
}

/// Secret bits per sifted symbol, `max(0, I_AB − I_AE)` at disturbance `D`.
///
/// Only Alice–Eve information is subtracted.
pub fn secret_rate_ideal(disturbance: f64, n: usize) -> f64 {
    let f = 1.0 - disturbance.clamp(0.0, 1.0);
    (mutual_info_ab(f, n) - mutual_info_ae(f, n)).max(0.0)
}
