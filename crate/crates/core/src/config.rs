//! JSON run configuration.
//!
//! Protocol fields sit at the top level; key-rate, tomography and
//! mutual-information settings live in their own sections. Every field is
//! optional and falls back to the default shown in [`RunConfig::default`].
//!
//! ```json
//! {
//!   "seed": 7,
//!   "mu_signal": 0.26,
//!   "channel": { "p_dark": 2e-8, "eta_detector": 0.1 },
//!   "rate": { "mode": "decoy", "max_km": 300 }
//! }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::protocol::{DetectorModel, ProtocolConfig};
use crate::security::{KeyRateMode, RateParams, TABLE_DIMENSIONS};

/// Key-rate curve settings. The channel is shared with the protocol section;
/// its `length_km` is replaced by each grid distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub mode: KeyRateMode,
    pub dim: usize,
    pub n_bases: usize,
    /// Signal intensity (caption value 0.45).
    pub mu: f64,
    /// Decoy intensity (caption value 0.15).
    pub nu: f64,
    pub ec_efficiency: f64,
    pub intrinsic_error: f64,
    pub max_km: f64,
    pub step_km: f64,
}

impl Default for RateSection {
    fn default() -> Self {
        let p = RateParams::default();
        RateSection {
            mode: KeyRateMode::Decoy,
            dim: p.dim,
            n_bases: p.n_bases,
            mu: p.mu,
            nu: p.nu,
            ec_efficiency: p.ec_efficiency,
            intrinsic_error: p.intrinsic_error,
            max_km: 300.0,
            step_km: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    /// Conclusive detections collected per (prepared state, measured basis).
    pub detections_per_cell: u64,
    /// Mean photon number during tomography.
    pub mu: f64,
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            detections_per_cell: 10_000,
            mu: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiCurvesSection {
    pub dims: Vec<usize>,
    /// Grid intervals on `D ∈ [0, 0.5]`.
    pub steps: usize,
}

impl Default for MiCurvesSection {
    fn default() -> Self {
        MiCurvesSection {
            dims: TABLE_DIMENSIONS.to_vec(),
            steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_bases_used: usize,
    pub dim: usize,
    pub pulse_rate_hz: f64,
    pub mu_signal: f64,
    pub mu_decoy: f64,
    pub decoy_period_s: f64,
    pub decoy_duration_s: f64,
    pub session_s: f64,
    pub bin_s: f64,
    pub eavesdropper: Option<f64>,
    pub visibility_noise: f64,
    pub detector: DetectorModel,
    pub channel: ChannelParams,
    pub rate: RateSection,
    pub tomography: TomographySection,
    pub mi_curves: MiCurvesSection,
    /// Worker threads for Monte Carlo runs; all cores when absent.
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        RunConfig {
            seed: p.seed,
            n_bases_used: p.n_bases_used,
            dim: p.dim,
            pulse_rate_hz: p.pulse_rate_hz,
            mu_signal: p.mu_signal,
            mu_decoy: p.mu_decoy,
            decoy_period_s: p.decoy_period_s,
            decoy_duration_s: p.decoy_duration_s,
            session_s: p.session_s,
            bin_s: p.bin_s,
            eavesdropper: p.eavesdropper,
            visibility_noise: p.visibility_noise,
            detector: p.detector,
            channel: p.channel,
            rate: RateSection::default(),
            tomography: TomographySection::default(),
            mi_curves: MiCurvesSection::default(),
            workers: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            n_bases_used: self.n_bases_used,
            dim: self.dim,
            pulse_rate_hz: self.pulse_rate_hz,
            mu_signal: self.mu_signal,
            mu_decoy: self.mu_decoy,
            decoy_period_s: self.decoy_period_s,
            decoy_duration_s: self.decoy_duration_s,
            session_s: self.session_s,
            bin_s: self.bin_s,
            seed: self.seed,
            eavesdropper: self.eavesdropper,
            visibility_noise: self.visibility_noise,
            detector: self.detector,
            channel: self.channel.clone(),
        }
    }

    /// Protocol settings used for tomography: no decoys, tomography intensity.
    pub fn tomography_protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            mu_signal: self.tomography.mu,
            mu_decoy: 0.0,
            decoy_duration_s: 0.0,
            ..self.protocol()
        }
    }

    pub fn rate_params(&self) -> RateParams {
        RateParams {
            dim: self.rate.dim,
            n_bases: self.rate.n_bases,
            mu: self.rate.mu,
            nu: self.rate.nu,
            ec_efficiency: self.rate.ec_efficiency,
            intrinsic_error: self.rate.intrinsic_error,
            channel: self.channel.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol().validate("")?;
        self.rate_params().validate("rate.")?;
        if !(self.rate.step_km > 0.0) || !self.rate.step_km.is_finite() {
            return Err(Error::invalid("rate.step_km", "must be positive"));
        }
        if !(self.rate.max_km >= 0.0) || !self.rate.max_km.is_finite() {
            return Err(Error::invalid("rate.max_km", "must be finite and ≥ 0"));
        }
        if self.tomography.detections_per_cell == 0 {
            return Err(Error::invalid(
                "tomography.detections_per_cell",
                "must be ≥ 1",
            ));
        }
        if !(self.tomography.mu > 0.0) || !self.tomography.mu.is_finite() {
            return Err(Error::invalid("tomography.mu", "must be positive"));
        }
        if self.mi_curves.steps == 0 {
            return Err(Error::invalid("mi_curves.steps", "must be ≥ 1"));
        }
        if let Some(&n) = self.mi_curves.dims.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(
                "mi_curves.dims",
                format!("dimension {n} is below 2"),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be ≥ 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() {
            Error::Validation {
                field: path,
                reason: strip_position(&inner),
            }
        } else {
            Error::Parse {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner),
            }
        }
    })?;
    de.end().map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e),
    })?;
    config.validate()?;
    Ok(config)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}
