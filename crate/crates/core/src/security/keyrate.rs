//! Asymptotic secret-key rate versus fiber length.

use serde::{Deserialize, Serialize};

use super::decoy::{decoy_bounds, gain_and_error, vacuum_yield};
use super::{mutual_info_ab, mutual_info_ae};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::roots::bisect;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateParams {
    /// Hilbert-space dimension `N`.
    pub dim: usize,
    /// Number of bases Alice and Bob choose from uniformly.
    pub n_bases: usize,
    /// Signal mean photon number.
    pub mu: f64,
    /// Decoy mean photon number.
    pub nu: f64,
    /// Error-correction inefficiency `f ≥ 1` (1 is the Shannon limit).
    pub ec_efficiency: f64,
    /// Intrinsic misalignment error of the optics.
    pub intrinsic_error: f64,
    pub channel: ChannelParams,
}

impl Default for RateParams {
    fn default() -> Self {
        RateParams {
            dim: 4,
            n_bases: 2,
            mu: 0.45,
            nu: 0.15,
            ec_efficiency: 1.0,
            intrinsic_error: 0.05,
            channel: ChannelParams::default(),
        }
    }
}

impl RateParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |n: &str| format!("{prefix}{n}");
        if self.dim < 2 {
            return Err(Error::invalid(field("dim"), "must be ≥ 2"));
        }
        if self.n_bases < 2 || self.n_bases > self.dim + 1 {
            return Err(Error::invalid(field("n_bases"), "must lie in [2, dim + 1]"));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid(field("mu"), "must be positive"));
        }
        if !(self.nu >= 0.0 && self.nu < self.mu) {
            return Err(Error::invalid(field("nu"), "must satisfy 0 ≤ nu < mu"));
        }
        if !(self.ec_efficiency >= 1.0) || !self.ec_efficiency.is_finite() {
            return Err(Error::invalid(field("ec_efficiency"), "must be ≥ 1"));
        }
        if !(0.0..=1.0).contains(&self.intrinsic_error) {
            return Err(Error::invalid(
                field("intrinsic_error"),
                "must be a probability",
            ));
        }
        self.channel.validate(&format!("{prefix}channel."))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyRateMode {
    /// Weak coherent pulses, every multi-photon pulse assumed insecure.
    NoDecoy,
    /// Signal plus one decoy intensity plus vacuum.
    Decoy,
}

impl KeyRateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyRateMode::NoDecoy => "no-decoy",
            KeyRateMode::Decoy => "decoy",
        }
    }
}

impl std::str::FromStr for KeyRateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decoy" => Ok(KeyRateMode::Decoy),
            "no-decoy" | "wcp" => Ok(KeyRateMode::NoDecoy),
            other => Err(Error::domain(format!("unknown key-rate mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub rate_bits_per_pulse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyRateCurve {
    pub mode: KeyRateMode,
    pub dim: usize,
    pub points: Vec<KeyRatePoint>,
}

/// `H_N(x) = −x·log₂(x/(N−1)) − (1−x)·log₂(1−x)`, the entropy of a symbol
/// error spread uniformly over `N−1` wrong values. `x` is clamped to
/// `[0, (N−1)/N]`, where `H_N` reaches its maximum `log₂N`.
pub fn entropy_n(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    let x = x.clamp(0.0, (nf - 1.0) / nf);
    let term = |p: f64, scale: f64| {
        if p <= 0.0 {
            0.0
        } else {
            -p * (p / scale).log2()
        }
    };
    term(x, nf - 1.0) + term(1.0 - x, 1.0)
}

/// Secret bits per pulse at `distance_km`.
pub fn key_rate_at(params: &RateParams, mode: KeyRateMode, distance_km: f64) -> f64 {
    let n = params.dim;
    let channel = params.channel.clone().with_length(distance_km);
    let sift = 1.0 / params.n_bases as f64;
    let log_n = (n as f64).log2();
    let Ok(signal) = gain_and_error(params.mu, &channel, n, params.intrinsic_error) else {
        return 0.0;
    };
    let leak = signal.gain * params.ec_efficiency * entropy_n(signal.qber, n);
    let single = match mode {
        KeyRateMode::Decoy => {
            let Ok(decoy) = gain_and_error(params.nu, &channel, n, params.intrinsic_error) else {
                return 0.0;
            };
            let Ok(b) = decoy_bounds(
                signal.gain,
                signal.qber,
                decoy.gain,
                decoy.qber,
                params.mu,
                params.nu,
                vacuum_yield(&channel, n),
                n,
            ) else {
                return 0.0;
            };
            let q1 = b.y1_lower * params.mu * (-params.mu).exp();
            q1 * (log_n - entropy_n(b.e1_upper, n))
        }
        KeyRateMode::NoDecoy => return no_decoy_rate(params, &channel),
    };
    (sift * (single - leak)).max(0.0)
}

fn wcp_rate_at_intensity(params: &RateParams, channel: &ChannelParams, mu: f64) -> f64 {
    let n = params.dim;
    let Ok(signal) = gain_and_error(mu, channel, n, params.intrinsic_error) else {
        return 0.0;
    };
    let p_multi = 1.0 - (-mu).exp() * (1.0 + mu);
    let q1 = (signal.gain - p_multi).max(0.0);
    if q1 == 0.0 {
        return 0.0;
    }
    // every error is charged to the single-photon pulses
    let e1 = (signal.qber * signal.gain / q1).min(1.0);
    let leak = signal.gain * params.ec_efficiency * entropy_n(signal.qber, n);
    let single = q1 * ((n as f64).log2() - entropy_n(e1, n));
    (single - leak).max(0.0) / params.n_bases as f64
}

/// Without decoys the signal intensity is chosen per distance, on a
/// logarithmic grid up to `params.mu`, to maximise the rate.
fn no_decoy_rate(params: &RateParams, channel: &ChannelParams) -> f64 {
    const GRID: usize = 400;
    const SPAN_DECADES: f64 = 6.0;
    (0..GRID)
        .map(|k| params.mu * 10f64.powf(-SPAN_DECADES * k as f64 / (GRID - 1) as f64))
        .map(|mu| wcp_rate_at_intensity(params, channel, mu))
        .fold(0.0, f64::max)
}

/// Rate on a uniform distance grid `0, step, …, max_km`.
pub fn key_rate_vs_distance(
    params: &RateParams,
    mode: KeyRateMode,
    max_km: f64,
    step_km: f64,
) -> Result<KeyRateCurve> {
    params.validate("")?;
    if !(step_km > 0.0) || !(max_km >= 0.0) {
        return Err(Error::domain("distance grid needs max ≥ 0 and step > 0"));
    }
    let count = (max_km / step_km + 1e-9).floor() as usize + 1;
    let points = (0..count)
        .map(|k| {
            let d = k as f64 * step_km;
            KeyRatePoint {
                distance_km: d,
                rate_bits_per_pulse: key_rate_at(params, mode, d),
            }
        })
        .collect();
    Ok(KeyRateCurve {
        mode,
        dim: params.dim,
        points,
    })
}

/// Distance at which the rate first reaches zero, searched up to `max_km`.
///
/// Returns 0 if no key is possible at the origin and `max_km` if the rate is
/// still positive there.
pub fn cutoff_distance(params: &RateParams, mode: KeyRateMode, max_km: f64) -> Result<f64> {
    params.validate("")?;
    let positive = |d: f64| key_rate_at(params, mode, d) > 0.0;
    if !positive(0.0) {
        return Ok(0.0);
    }
    if positive(max_km) {
        return Ok(max_km);
    }
    bisect(|d| if positive(d) { 1.0 } else { -1.0 }, 0.0, max_km, 1e-6)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MutualInfoRow {
    pub n: usize,
    pub disturbance: f64,
    pub i_ab: f64,
    pub i_ae: f64,
}

/// `I_AB` and `I_AE` on `steps + 1` uniform disturbance samples in `[0, 0.5]`.
pub fn mutual_info_curves(dims: &[usize], steps: usize) -> Result<Vec<MutualInfoRow>> {
    if steps == 0 {
        return Err(Error::domain("need at least one grid step"));
    }
    if let Some(&bad) = dims.iter().find(|&&n| n < 2) {
        return Err(Error::domain(format!("dimension must be ≥ 2, got {bad}")));
    }
    let mut rows = Vec::with_capacity(dims.len() * (steps + 1));
    for &n in dims {
        for k in 0..=steps {
            let d = 0.5 * k as f64 / steps as f64;
            rows.push(MutualInfoRow {
                n,
                disturbance: d,
                i_ab: mutual_info_ab(1.0 - d, n),
                i_ae: mutual_info_ae(1.0 - d, n),
            });
        }
    }
    Ok(rows)
}
