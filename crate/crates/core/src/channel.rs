//! Multicore-fiber channel and threshold-detector model.
//!
//! Loss is lumped into a single transmittance (fiber attenuation, chip
//! insertion losses and detector efficiency). Photon numbers are Poissonian,
//! so detector `j` clicks with probability `1 − (1 − p_dark)·exp(−μ·η·q_j)`
//! where `q_j` is the fraction of the pulse routed to that detector.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chipmodel::TransferMatrix;
use crate::error::{Error, Result};
use crate::qstate::{StateVector, DIM};

/// Per-core phase drift accumulated in the fiber.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseDriftModel {
    #[default]
    None,
    /// Constant phase offset per core, radians.
    FixedOffsets { phases: [f64; DIM] },
    /// Independent Gaussian random walk per core with `sigma` radians per pulse.
    RandomWalk { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub length_km: f64,
    pub alpha_db_per_km: f64,
    pub alice_insertion_db: f64,
    pub bob_insertion_db: f64,
    pub eta_detector: f64,
    /// Dark-count probability per gate per detector.
    pub p_dark: f64,
    /// Power leaked from each core into every other core, in dB below the
    /// signal. `None` disables crosstalk.
    pub crosstalk_db: Option<f64>,
    pub drift: PhaseDriftModel,
}

impl Default for ChannelParams {
    /// 3 m of fiber with the detector figures used for the key-rate curves:
    /// `p_dark = 2e-8`, `η_d = 0.1`, `α = 0.2 dB/km`; no chip insertion loss.
    fn default() -> Self {
        ChannelParams {
            length_km: 0.003,
            alpha_db_per_km: 0.2,
            alice_insertion_db: 0.0,
            bob_insertion_db: 0.0,
            eta_detector: 0.1,
            p_dark: 2e-8,
            crosstalk_db: None,
            drift: PhaseDriftModel::None,
        }
    }
}

impl ChannelParams {
    /// Lossless fiber, unit-efficiency noiseless detectors.
    pub fn ideal() -> Self {
        ChannelParams {
            length_km: 0.0,
            alpha_db_per_km: 0.0,
            eta_detector: 1.0,
            p_dark: 0.0,
            ..ChannelParams::default()
        }
    }

    pub fn with_length(mut self, km: f64) -> Self {
        self.length_km = km;
        self
    }

    /// Checks every invariant, naming fields relative to `prefix`.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}{name}");
        for (name, v) in [
            ("length_km", self.length_km),
            ("alpha_db_per_km", self.alpha_db_per_km),
            ("alice_insertion_db", self.alice_insertion_db),
            ("bob_insertion_db", self.bob_insertion_db),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    field(name),
                    format!("must be finite and ≥ 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("eta_detector", self.eta_detector), ("p_dark", self.p_dark)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    field(name),
                    format!("must be a probability, got {v}"),
                ));
            }
        }
        if let Some(x) = self.crosstalk_db {
            let min = 10.0 * ((DIM - 1) as f64).log10();
            if !(x >= min) || x.is_nan() {
                return Err(Error::invalid(
                    field("crosstalk_db"),
                    format!("must be ≥ {min:.3} dB so leakage stays below unity, got {x}"),
                ));
            }
        }
        match &self.drift {
            PhaseDriftModel::None => {}
            PhaseDriftModel::FixedOffsets { phases } => {
                if phases.iter().any(|p| !p.is_finite()) {
                    return Err(Error::invalid(
                        field("drift.phases"),
                        "phases must be finite",
                    ));
                }
            }
            PhaseDriftModel::RandomWalk { sigma } => {
                if !(*sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::invalid(
                        field("drift.sigma"),
                        "must be finite and ≥ 0",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Fraction of power leaking from one core into each other core.
    pub fn crosstalk_fraction(&self) -> f64 {
        self.crosstalk_db.map_or(0.0, |db| 10f64.powf(-db / 10.0))
    }
}

/// End-to-end detection probability for a single photon, including detector
/// efficiency.
pub fn transmittance(params: &ChannelParams) -> f64 {
    let loss_db = params.alpha_db_per_km * params.length_km
        + params.alice_insertion_db
        + params.bob_insertion_db;
    params.eta_detector * 10f64.powf(-loss_db / 10.0)
}

/// Multiplies amplitude `k` by `e^{i·phases[k]}`.
pub fn apply_drift(state: &StateVector, phases: &[f64; DIM]) -> StateVector {
    StateVector::from_amplitudes(
        state
            .amplitudes()
            .iter()
            .zip(phases)
            .map(|(a, &p)| a * Complex64::from_polar(1.0, p))
            .collect(),
    )
}

/// Mixes detector powers through a symmetric pairwise leakage `leak`.
pub fn apply_crosstalk(q: [f64; DIM], leak: f64) -> [f64; DIM] {
    if leak == 0.0 {
        return q;
    }
    let total: f64 = q.iter().sum();
    let keep = 1.0 - (DIM - 1) as f64 * leak;
    let mut out = [0.0; DIM];
    for j in 0..DIM {
        out[j] = keep * q[j] + leak * (total - q[j]);
    }
    out
}

/// Independent click probability of each of the four threshold detectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickDistribution {
    pub p_click: [f64; DIM],
}

/// Click probabilities for `sent` after drift, Bob's chip and the lossy channel.
pub fn click_probabilities(
    sent: &StateVector,
    bob_unitary: &TransferMatrix,
    mu: f64,
    params: &ChannelParams,
    drift_phases: &[f64; DIM],
) -> Result<ClickDistribution> {
    if !(mu >= 0.0) {
        return Err(Error::domain(format!(
            "mean photon number must be ≥ 0, got {mu}"
        )));
    }
    let out = bob_unitary.apply(&apply_drift(sent, drift_phases));
    let mut q = [0.0; DIM];
    for (qj, a) in q.iter_mut().zip(out.amplitudes()) {
        *qj = a.norm_sqr();
    }
    Ok(clicks_from_powers(
        apply_crosstalk(q, params.crosstalk_fraction()),
        mu * transmittance(params),
        params.p_dark,
    ))
}

/// Poisson threshold model given per-detector power fractions and `μ·η`.
pub fn clicks_from_powers(q: [f64; DIM], mu_eta: f64, p_dark: f64) -> ClickDistribution {
    let mut p_click = [0.0; DIM];
    for (p, qj) in p_click.iter_mut().zip(q) {
        *p = -((-p_dark).ln_1p() - mu_eta * qj).exp_m1();
    }
    ClickDistribution { p_click }
}

/// One Bernoulli draw per detector.
pub fn sample_clicks<R: Rng + ?Sized>(dist: &ClickDistribution, rng: &mut R) -> [bool; DIM] {
    let mut out = [false; DIM];
    for (o, &p) in out.iter_mut().zip(&dist.p_click) {
        *o = rng.random::<f64>() < p;
    }
    out
}
