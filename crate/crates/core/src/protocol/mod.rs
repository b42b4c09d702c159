//! Monte Carlo prepare-measure-sift engine.
//!
//! Alice picks a basis, a state and (from the decoy schedule) an intensity
//! for each pulse. An optional eavesdropper perturbs the symbol, the channel
//! and Bob's chip set the click probabilities and Bob keeps a single click as
//! a conclusive outcome. Detector rails are recorded raw; the per-basis
//! detector permutation is undone only when comparing symbols.

mod session;
mod streams;
mod tomography;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_crosstalk, apply_drift, clicks_from_powers, sample_clicks};
use crate::channel::{transmittance, ChannelParams};
use crate::chipmodel::TransferMatrix;
use crate::chipmodel::{alice_settings_for, bob_permutation, bob_unitary, prepare, rail_to_index};
use crate::error::{Error, Result};
use crate::qstate::{Basis, StateVector, DIM};

pub use session::{
    decoy_window_count, in_decoy_window, pulse_count, run_session, run_session_with_workers,
    simulate_pulses, ClassTotals, SessionBin, SessionReport, SessionTotals,
};
pub use tomography::{
    theory_matrix, tomography, tomography_with_workers, TomographyMatrix, CELL_LABELS,
};

/// How detector clicks are generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModel {
    /// Poissonian pulses on four independent threshold detectors.
    #[default]
    Threshold,
    /// Exactly one click per pulse, drawn from the output power distribution.
    /// Loss and dark counts are ignored.
    Projective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Number of bases in use, taken from the front of `M0, M1, M2`.
    pub n_bases_used: usize,
    pub dim: usize,
    pub pulse_rate_hz: f64,
    pub mu_signal: f64,
    pub mu_decoy: f64,
    pub decoy_period_s: f64,
    pub decoy_duration_s: f64,
    pub session_s: f64,
    /// Width of the report time bins.
    pub bin_s: f64,
    pub seed: u64,
    /// Disturbance `D` of an intercepting cloner, if present.
    pub eavesdropper: Option<f64>,
    /// Probability that an otherwise correct matched-basis click lands on a
    /// uniformly chosen wrong detector.
    pub visibility_noise: f64,
    pub detector: DetectorModel,
    pub channel: ChannelParams,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n_bases_used: 2,
            dim: DIM,
            pulse_rate_hz: 5_000.0,
            mu_signal: 0.26,
            mu_decoy: 0.15,
            decoy_period_s: 120.0,
            decoy_duration_s: 10.0,
            session_s: 600.0,
            bin_s: 10.0,
            seed: 0,
            eavesdropper: None,
            visibility_noise: 0.13,
            detector: DetectorModel::Threshold,
            channel: ChannelParams::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |n: &str| format!("{prefix}{n}");
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(2..=3).contains(&self.n_bases_used) {
            return Err(Error::invalid(field("n_bases_used"), "must be 2 or 3"));
        }
        if self.dim != DIM {
            return Err(Error::invalid(
                field("dim"),
                "only dimension 4 is simulated",
            ));
        }
        if !positive(self.pulse_rate_hz) {
            return Err(Error::invalid(field("pulse_rate_hz"), "must be positive"));
        }
        if !positive(self.mu_signal) {
            return Err(Error::invalid(field("mu_signal"), "must be positive"));
        }
        if !(self.mu_decoy >= 0.0 && self.mu_decoy < self.mu_signal) {
            return Err(Error::invalid(
                field("mu_decoy"),
                "must satisfy 0 ≤ mu_decoy < mu_signal",
            ));
        }
        if !positive(self.decoy_period_s) {
            return Err(Error::invalid(field("decoy_period_s"), "must be positive"));
        }
        if !(self.decoy_duration_s >= 0.0 && self.decoy_duration_s <= self.decoy_period_s) {
            return Err(Error::invalid(
                field("decoy_duration_s"),
                "must lie in [0, decoy_period_s]",
            ));
        }
        if !(self.session_s >= 0.0 && self.session_s.is_finite()) {
            return Err(Error::invalid(field("session_s"), "must be finite and ≥ 0"));
        }
        if !positive(self.bin_s) {
            return Err(Error::invalid(field("bin_s"), "must be positive"));
        }
        if let Some(d) = self.eavesdropper {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::invalid(
                    field("eavesdropper"),
                    "disturbance must lie in [0, 1]",
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.visibility_noise) {
            return Err(Error::invalid(
                field("visibility_noise"),
                "must be a probability",
            ));
        }
        self.channel.validate(&format!("{prefix}channel."))
    }

    /// Mean photon number for `class`.
    pub fn intensity(&self, class: IntensityClass) -> f64 {
        match class {
            IntensityClass::Signal => self.mu_signal,
            IntensityClass::Decoy => self.mu_decoy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityClass {
    Signal,
    Decoy,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 2] = [IntensityClass::Signal, IntensityClass::Decoy];

    pub fn as_str(self) -> &'static str {
        match self {
            IntensityClass::Signal => "signal",
            IntensityClass::Decoy => "decoy",
        }
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

/// Reduced click pattern. `Click` carries the detector rail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Click(usize),
    NoClick,
    MultiClick,
}

impl Outcome {
    pub fn from_clicks(clicks: &[bool; DIM]) -> Outcome {
        let mut fired = clicks
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(r, _)| r);
        match (fired.next(), fired.next()) {
            (None, _) => Outcome::NoClick,
            (Some(r), None) => Outcome::Click(r),
            _ => Outcome::MultiClick,
        }
    }

    pub fn rail(self) -> Option<usize> {
        match self {
            Outcome::Click(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub t_index: u64,
    pub alice_basis: Basis,
    pub alice_index: usize,
    pub intensity_class: IntensityClass,
    pub bob_basis: Basis,
    pub outcome: Outcome,
}

/// A matched-basis conclusive event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedSymbol {
    pub basis: Basis,
    pub alice_index: usize,
    /// Detector rail that clicked.
    pub bob_rail: usize,
}

impl SiftedSymbol {
    pub fn bob_index(&self) -> usize {
        rail_to_index(self.basis, self.bob_rail)
    }

    pub fn is_error(&self) -> bool {
        self.bob_index() != self.alice_index
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub signal: Vec<SiftedSymbol>,
    pub decoy: Vec<SiftedSymbol>,
}

impl SiftedKey {
    pub fn class(&self, class: IntensityClass) -> &[SiftedSymbol] {
        match class {
            IntensityClass::Signal => &self.signal,
            IntensityClass::Decoy => &self.decoy,
        }
    }

    pub fn len(&self) -> usize {
        self.signal.len() + self.decoy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed chip responses and channel constants shared by every pulse.
#[derive(Clone, Debug)]
pub struct Apparatus {
    config: ProtocolConfig,
    states: [[StateVector; DIM]; 3],
    receivers: [TransferMatrix; 3],
    eta: f64,
    leak: f64,
}

impl Apparatus {
    pub fn new(config: &ProtocolConfig) -> Result<Self> {
        config.validate("")?;
        let state = |b: Basis, i: usize| prepare(&alice_settings_for(b, i)?);
        let mut states: Vec<[StateVector; DIM]> = Vec::with_capacity(3);
        for b in Basis::ALL {
            states.push([state(b, 0)?, state(b, 1)?, state(b, 2)?, state(b, 3)?]);
        }
        let states: [[StateVector; DIM]; 3] = states.try_into().expect("three bases");
        Ok(Apparatus {
            config: config.clone(),
            states,
            receivers: Basis::ALL.map(bob_unitary),
            eta: transmittance(&config.channel),
            leak: config.channel.crosstalk_fraction(),
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    /// Field Alice's chip emits for `(basis, index)`.
    pub fn sent_state(&self, basis: Basis, index: usize) -> &StateVector {
        &self.states[basis.index()][index]
    }

    /// Power fraction reaching each of Bob's detectors.
    pub fn detector_powers(
        &self,
        basis: Basis,
        index: usize,
        bob_basis: Basis,
        drift: &[f64; DIM],
    ) -> [f64; DIM] {
        let sent = apply_drift(self.sent_state(basis, index), drift);
        let out = self.receivers[bob_basis.index()].apply(&sent);
        let mut q = [0.0; DIM];
        for (qj, a) in q.iter_mut().zip(out.amplitudes()) {
            *qj = a.norm_sqr();
        }
        apply_crosstalk(q, self.leak)
    }
}

/// Alice's random basis and state for pulse `t_index`; the intensity class
/// follows from the decoy schedule.
pub fn alice_choose<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ProtocolConfig,
    t_index: u64,
) -> (Basis, usize, IntensityClass) {
    let basis = Basis::ALL[rng.random_range(0..config.n_bases_used)];
    let index = rng.random_range(0..DIM);
    let t = t_index as f64 / config.pulse_rate_hz;
    let class = if in_decoy_window(config, t) {
        IntensityClass::Decoy
    } else {
        IntensityClass::Signal
    };
    (basis, index, class)
}

/// Symmetric intercept: keeps `alice_index` with probability `1 − D`,
/// otherwise substitutes one of the other three symbols uniformly.
pub fn eve_clone_attack<R: Rng + ?Sized>(
    alice_index: usize,
    disturbance: f64,
    rng: &mut R,
) -> usize {
    if disturbance <= 0.0 || rng.random::<f64>() >= disturbance {
        return alice_index;
    }
    let shift = rng.random_range(1..DIM);
    (alice_index + shift) % DIM
}

/// Bob's measurement of the state `(basis, index)` in `bob_basis`.
pub fn bob_measure<R: Rng + ?Sized>(
    apparatus: &Apparatus,
    prepared: (Basis, usize),
    bob_basis: Basis,
    class: IntensityClass,
    drift: &[f64; DIM],
    rng: &mut R,
) -> Outcome {
    let config = &apparatus.config;
    let (basis, index) = prepared;
    let q = apparatus.detector_powers(basis, index, bob_basis, drift);
    let outcome = match config.detector {
        DetectorModel::Threshold => {
            let mu_eta = config.intensity(class) * apparatus.eta;
            let dist = clicks_from_powers(q, mu_eta, config.channel.p_dark);
            Outcome::from_clicks(&sample_clicks(&dist, rng))
        }
        DetectorModel::Projective => Outcome::Click(sample_rail(&q, rng)),
    };
    let correct_rail = bob_permutation(basis)[index];
    match outcome {
        Outcome::Click(rail)
            if basis == bob_basis
                && rail == correct_rail
                && config.visibility_noise > 0.0
                && rng.random::<f64>() < config.visibility_noise =>
        {
            Outcome::Click((rail + rng.random_range(1..DIM)) % DIM)
        }
        other => other,
    }
}

fn sample_rail<R: Rng + ?Sized>(q: &[f64; DIM], rng: &mut R) -> usize {
    let total: f64 = q.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (rail, &p) in q.iter().enumerate() {
        if x < p {
            return rail;
        }
        x -= p;
    }
    q.iter().rposition(|&p| p > 0.0).unwrap_or(DIM - 1)
}

/// Keeps matched-basis single-click records, split by intensity class.
pub fn sift(records: &[PulseRecord]) -> SiftedKey {
    let mut key = SiftedKey::default();
    for r in records.iter().filter(|r| r.alice_basis == r.bob_basis) {
        if let Outcome::Click(rail) = r.outcome {
            let symbol = SiftedSymbol {
                basis: r.alice_basis,
                alice_index: r.alice_index,
                bob_rail: rail,
            };
            match r.intensity_class {
                IntensityClass::Signal => key.signal.push(symbol),
                IntensityClass::Decoy => key.decoy.push(symbol),
            }
        }
    }
    key
}

/// Symbol error rate of `class`.
pub fn qber(key: &SiftedKey, class: IntensityClass) -> Result<f64> {
    let symbols = key.class(class);
    if symbols.is_empty() {
        return Err(Error::UndefinedEstimate(format!(
            "no sifted {} symbols",
            class.as_str()
        )));
    }
    let errors = symbols.iter().filter(|s| s.is_error()).count();
    Ok(errors as f64 / symbols.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn ideal(mu: f64) -> ProtocolConfig {
        ProtocolConfig {
            mu_signal: mu,
            mu_decoy: 0.0,
            visibility_noise: 0.0,
            channel: ChannelParams::ideal(),
            ..ProtocolConfig::default()
        }
    }

    fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        (count as f64 / n as f64 - p).abs() <= 3.0 * sigma
    }

    #[test]
    fn alice_choice_is_uniform_over_eight_pairs() {
        let cfg = ProtocolConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut counts = [[0usize; DIM]; 3];
        let n = 1_000_000;
        for t in 0..n {
            let (b, i, _) = alice_choose(&mut rng, &cfg, t as u64);
            counts[b.index()][i] += 1;
        }
        assert!(counts[2].iter().all(|&c| c == 0));
        for row in &counts[..2] {
            for &c in row {
                assert!(within_3_sigma(c, n, 0.125), "{c}");
            }
        }
    }

    #[test]
    fn decoy_class_follows_schedule() {
        let cfg = ProtocolConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        // 5 s into the session lies in the first decoy window
        assert_eq!(
            alice_choose(&mut rng, &cfg, 25_000).2,
            IntensityClass::Decoy
        );
        assert_eq!(
            alice_choose(&mut rng, &cfg, 100_000).2,
            IntensityClass::Signal
        );
    }

    #[test]
    fn eve_examples() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for i in 0..DIM {
            for _ in 0..100 {
                assert_eq!(eve_clone_attack(i, 0.0, &mut rng), i);
            }
        }
        let n = 1_000_000;
        let mut hist = [0usize; DIM];
        for _ in 0..n {
            hist[eve_clone_attack(2, 1.0, &mut rng)] += 1;
        }
        assert_eq!(hist[2], 0);
        for j in [0, 1, 3] {
            assert!(within_3_sigma(hist[j], n, 1.0 / 3.0), "{hist:?}");
        }
        let kept = (0..n)
            .filter(|_| eve_clone_attack(1, 0.25, &mut rng) == 1)
            .count();
        assert!(within_3_sigma(kept, n, 0.75), "{kept}");
    }

    #[test]
    fn projective_matched_basis_is_deterministic() {
        let cfg = ProtocolConfig {
            detector: DetectorModel::Projective,
            ..ideal(1.0)
        };
        let app = Apparatus::new(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for b in Basis::ALL {
            for i in 0..DIM {
                for _ in 0..50 {
                    let o =
                        bob_measure(&app, (b, i), b, IntensityClass::Signal, &[0.0; 4], &mut rng);
                    assert_eq!(o, Outcome::Click(bob_permutation(b)[i]));
                }
            }
        }
    }

    #[test]
    fn conclusive_probability_matches_closed_form() {
        let cfg = ProtocolConfig {
            mu_signal: 0.26,
            visibility_noise: 0.0,
            channel: ChannelParams {
                p_dark: 0.0,
                ..ChannelParams::default()
            },
            ..ProtocolConfig::default()
        };
        let app = Apparatus::new(&cfg).unwrap();
        let eta = transmittance(&cfg.channel);
        let p = 1.0 - (-0.26 * eta).exp();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| {
                let o = bob_measure(
                    &app,
                    (Basis::M1, 3),
                    Basis::M1,
                    IntensityClass::Signal,
                    &[0.0; 4],
                    &mut rng,
                );
                o.rail().is_some()
            })
            .count();
        assert!(within_3_sigma(hits, n, p), "{hits} vs {}", p * n as f64);
    }

    #[test]
    fn mismatched_basis_outcomes_are_uniform() {
        let cfg = ideal(0.2);
        let app = Apparatus::new(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut hist = [0usize; DIM];
        let mut conclusive = 0;
        while conclusive < 100_000 {
            let o = bob_measure(
                &app,
                (Basis::M0, 1),
                Basis::M2,
                IntensityClass::Signal,
                &[0.0; 4],
                &mut rng,
            );
            if let Outcome::Click(r) = o {
                hist[r] += 1;
                conclusive += 1;
            }
        }
        for c in hist {
            assert!(within_3_sigma(c, conclusive, 0.25), "{hist:?}");
        }
    }

    #[test]
    fn visibility_noise_only_hits_matched_basis() {
        let cfg = ProtocolConfig {
            visibility_noise: 1.0,
            detector: DetectorModel::Projective,
            ..ideal(1.0)
        };
        let app = Apparatus::new(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..100 {
            let o = bob_measure(
                &app,
                (Basis::M0, 0),
                Basis::M0,
                IntensityClass::Signal,
                &[0.0; 4],
                &mut rng,
            );
            assert_ne!(o, Outcome::Click(bob_permutation(Basis::M0)[0]));
        }
    }

    fn record(a: Basis, b: Basis, outcome: Outcome) -> PulseRecord {
        PulseRecord {
            t_index: 0,
            alice_basis: a,
            alice_index: 0,
            intensity_class: IntensityClass::Signal,
            bob_basis: b,
            outcome,
        }
    }

    #[test]
    fn sifting_rules() {
        let mismatched = vec![record(Basis::M0, Basis::M1, Outcome::Click(0)); 10];
        assert!(sift(&mismatched).is_empty());
        let multi = [record(Basis::M0, Basis::M0, Outcome::MultiClick)];
        assert!(sift(&multi).is_empty());
        let none = [record(Basis::M2, Basis::M2, Outcome::NoClick)];
        assert!(sift(&none).is_empty());
        let good = [record(Basis::M2, Basis::M2, Outcome::Click(1))];
        assert_eq!(sift(&good).signal.len(), 1);
    }

    #[test]
    fn qber_inverts_detector_permutation() {
        let mut records = Vec::new();
        for b in Basis::ALL {
            for i in 0..DIM {
                let mut r = record(b, b, Outcome::Click(bob_permutation(b)[i]));
                r.alice_index = i;
                records.push(r);
            }
        }
        let key = sift(&records);
        assert_eq!(qber(&key, IntensityClass::Signal).unwrap(), 0.0);
        assert!(matches!(
            qber(&key, IntensityClass::Decoy),
            Err(Error::UndefinedEstimate(_))
        ));
    }

    #[test]
    fn outcome_reduction() {
        assert_eq!(Outcome::from_clicks(&[false; 4]), Outcome::NoClick);
        assert_eq!(
            Outcome::from_clicks(&[false, false, true, false]),
            Outcome::Click(2)
        );
        assert_eq!(
            Outcome::from_clicks(&[true, false, true, false]),
            Outcome::MultiClick
        );
    }

    #[test]
    fn config_validation_names_fields() {
        let bad = ProtocolConfig {
            mu_decoy: 0.3,
            ..ProtocolConfig::default()
        };
        assert!(
            matches!(bad.validate(""), Err(Error::Validation { field, .. }) if field == "mu_decoy")
        );
        let bad = ProtocolConfig {
            eavesdropper: Some(1.5),
            ..ProtocolConfig::default()
        };
        assert!(bad.validate("").is_err());
        let bad = ProtocolConfig {
            decoy_duration_s: 200.0,
            ..ProtocolConfig::default()
        };
        assert!(bad.validate("").is_err());
        let bad = ProtocolConfig {
            n_bases_used: 4,
            ..ProtocolConfig::default()
        };
        assert!(bad.validate("").is_err());
    }
}
