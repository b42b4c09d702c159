//! Weak-coherent-pulse gains and the two-intensity-plus-vacuum decoy bound,
//! generalized to `N` detectors by using `e₀ = (N−1)/N` for the error rate of
//! a random click.

use crate::channel::{transmittance, ChannelParams};
use crate::error::{Error, Result};

/// Gain (probability of a detection per pulse) and its error rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gain {
    pub gain: f64,
    pub qber: f64,
}

/// Expected gain and QBER for intensity `mu` over `params` with `n`
/// detectors and intrinsic misalignment error `e_det`.
///
/// The vacuum yield is `Y₀ = N·p_dark`, one dark-count opportunity per
/// detector, and dark clicks are wrong with probability `(N−1)/N`.
pub fn gain_and_error(mu: f64, params: &ChannelParams, n: usize, e_det: f64) -> Result<Gain> {
    if !(mu >= 0.0) {
        return Err(Error::domain(format!(
            "mean photon number must be ≥ 0, got {mu}"
        )));
    }
    let eta = transmittance(params);
    let y0 = vacuum_yield(params, n);
    let gain = -((-y0).ln_1p() - eta * mu).exp_m1();
    if gain <= 0.0 {
        return Err(Error::UndefinedEstimate(
            "gain is zero; QBER undefined".into(),
        ));
    }
    let e0 = random_error(n);
    let qber = (e_det * (gain - y0) + e0 * y0) / gain;
    Ok(Gain { gain, qber })
}

pub(crate) fn vacuum_yield(params: &ChannelParams, n: usize) -> f64 {
    (n as f64 * params.p_dark).min(1.0)
}

pub(crate) fn random_error(n: usize) -> f64 {
    (n as f64 - 1.0) / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoyBounds {
    /// Lower bound on the single-photon yield.
    pub y1_lower: f64,
    /// Upper bound on the single-photon error rate.
    pub e1_upper: f64,
}

/// Single-photon yield and error bounds from a signal `mu`, a weak decoy
/// `nu < mu` and the vacuum yield `y0`.
///
/// Both outputs are clamped to `[0, 1]`. When the yield bound collapses to
/// zero the error bound is reported as 1.
#[allow(clippy::too_many_arguments)]
pub fn decoy_bounds(
    q_mu: f64,
    e_mu: f64,
    q_nu: f64,
    e_nu: f64,
    mu: f64,
    nu: f64,
    y0: f64,
    n: usize,
) -> Result<DecoyBounds> {
    if !(nu > 0.0 && nu < mu) {
        return Err(Error::Estimation(format!(
            "need 0 < nu < mu, got nu = {nu}, mu = {mu}"
        )));
    }
    for (name, v) in [
        ("Q_mu", q_mu),
        ("Q_nu", q_nu),
        ("E_mu", e_mu),
        ("E_nu", e_nu),
        ("Y0", y0),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Estimation(format!(
                "{name} = {v} is not a probability"
            )));
        }
    }
    if n < 2 {
        return Err(Error::Estimation(format!("dimension must be ≥ 2, got {n}")));
    }
    let mu2 = mu * mu;
    let nu2 = nu * nu;
    let raw = mu / (mu * nu - nu2)
        * (q_nu * nu.exp() - q_mu * mu.exp() * nu2 / mu2 - (mu2 - nu2) / mu2 * y0);
    let y1_lower = raw.clamp(0.0, 1.0);
    let e1_upper = if y1_lower > 0.0 {
        ((e_nu * q_nu * nu.exp() - random_error(n) * y0) / (y1_lower * nu)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecoyBounds { y1_lower, e1_upper })
}
