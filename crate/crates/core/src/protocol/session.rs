use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::streams::{stream, with_workers, Domain, CHUNK};
use super::{alice_choose, bob_measure, eve_clone_attack, Apparatus, IntensityClass, Outcome};
use super::{ProtocolConfig, PulseRecord};
use crate::channel::{transmittance, PhaseDriftModel};
use crate::error::Result;
use crate::qstate::{Basis, DIM};

/// Whether session time `t` (seconds) falls inside a decoy window.
pub fn in_decoy_window(config: &ProtocolConfig, t: f64) -> bool {
    config.decoy_duration_s > 0.0 && t.rem_euclid(config.decoy_period_s) < config.decoy_duration_s
}

/// Pulses emitted in the session.
pub fn pulse_count(config: &ProtocolConfig) -> u64 {
    (config.pulse_rate_hz * config.session_s + 1e-9).floor() as u64
}

/// Decoy windows that contain at least one pulse.
pub fn decoy_window_count(config: &ProtocolConfig) -> usize {
    let total = pulse_count(config);
    if config.decoy_duration_s <= 0.0 || total == 0 {
        return 0;
    }
    let mut windows = 0;
    let mut k = 0u64;
    loop {
        let start = k as f64 * config.decoy_period_s;
        let first = (start * config.pulse_rate_hz - 1e-9).ceil().max(0.0) as u64;
        if first >= total {
            break;
        }
        if (first as f64 / config.pulse_rate_hz) < start + config.decoy_duration_s {
            windows += 1;
        }
        k += 1;
    }
    windows
}

fn bin_count(config: &ProtocolConfig) -> usize {
    if pulse_count(config) == 0 {
        return 0;
    }
    (config.session_s / config.bin_s - 1e-9).ceil().max(1.0) as usize
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClassTotals {
    pub pulses: u64,
    /// Single-click events in any basis.
    pub conclusive: u64,
    pub sifted: u64,
    pub errors: u64,
}

impl ClassTotals {
    fn add(&mut self, other: &ClassTotals) {
        self.pulses += other.pulses;
        self.conclusive += other.conclusive;
        self.sifted += other.sifted;
        self.errors += other.errors;
    }

    /// Error fraction of the sifted symbols, if any.
    pub fn qber(&self) -> Option<f64> {
        (self.sifted > 0).then(|| self.errors as f64 / self.sifted as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionTotals {
    pub signal: ClassTotals,
    pub decoy: ClassTotals,
    pub decoy_windows: usize,
}

impl SessionTotals {
    pub fn class(&self, class: IntensityClass) -> &ClassTotals {
        match class {
            IntensityClass::Signal => &self.signal,
            IntensityClass::Decoy => &self.decoy,
        }
    }

    /// QBER over every sifted symbol regardless of intensity.
    pub fn qber(&self) -> Option<f64> {
        let sifted = self.signal.sifted + self.decoy.sifted;
        (sifted > 0).then(|| (self.signal.errors + self.decoy.errors) as f64 / sifted as f64)
    }
}

/// One time bin restricted to one intensity class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionBin {
    pub time_s: f64,
    pub intensity_class: IntensityClass,
    pub pulses: u64,
    pub sifted_count: u64,
    pub errors: u64,
    /// `None` when the bin holds no sifted symbols.
    pub qber: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SessionReport {
    pub bins: Vec<SessionBin>,
    pub totals: SessionTotals,
    /// `−ln(1 − conclusive rate)/η` per class.
    pub estimated_mu_signal: Option<f64>,
    pub estimated_mu_decoy: Option<f64>,
}

impl SessionReport {
    pub fn bins_of(&self, class: IntensityClass) -> impl Iterator<Item = &SessionBin> {
        self.bins.iter().filter(move |b| b.intensity_class == class)
    }
}

#[derive(Clone, Debug)]
struct Tally {
    bins: Vec<[ClassTotals; 2]>,
    totals: [ClassTotals; 2],
}

impl Tally {
    fn new(bins: usize) -> Self {
        Tally {
            bins: vec![[ClassTotals::default(); 2]; bins],
            totals: [ClassTotals::default(); 2],
        }
    }

    fn record(&mut self, bin: usize, r: &PulseRecord, error: Option<bool>) {
        let slot = r.intensity_class.slot();
        for t in [&mut self.bins[bin][slot], &mut self.totals[slot]] {
            t.pulses += 1;
            if r.outcome.rail().is_some() {
                t.conclusive += 1;
            }
            if let Some(e) = error {
                t.sifted += 1;
                t.errors += e as u64;
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            a[0].add(&b[0]);
            a[1].add(&b[1]);
        }
        self.totals[0].add(&other.totals[0]);
        self.totals[1].add(&other.totals[1]);
        self
    }
}

fn chunk_range(k: u64, total: u64) -> std::ops::Range<u64> {
    k * CHUNK..((k + 1) * CHUNK).min(total)
}

/// Phase of every core at the start of each chunk.
fn chunk_start_phases(config: &ProtocolConfig, chunks: u64, total: u64) -> Vec<[f64; DIM]> {
    match config.channel.drift {
        PhaseDriftModel::None => vec![[0.0; DIM]; chunks as usize],
        PhaseDriftModel::FixedOffsets { phases } => vec![phases; chunks as usize],
        PhaseDriftModel::RandomWalk { sigma } => {
            let steps: Vec<[f64; DIM]> = (0..chunks)
                .into_par_iter()
                .map(|k| {
                    let mut walk = DriftWalk::new(config.seed, k, sigma, [0.0; DIM]);
                    for _ in chunk_range(k, total) {
                        walk.step();
                    }
                    walk.phases
                })
                .collect();
            let mut acc = [0.0; DIM];
            steps
                .iter()
                .map(|s| {
                    let start = acc;
                    for (a, d) in acc.iter_mut().zip(s) {
                        *a += d;
                    }
                    start
                })
                .collect()
        }
    }
}

struct DriftWalk {
    rng: rand_chacha::ChaCha12Rng,
    normal: Option<Normal<f64>>,
    phases: [f64; DIM],
}

impl DriftWalk {
    fn new(seed: u64, chunk: u64, sigma: f64, start: [f64; DIM]) -> Self {
        DriftWalk {
            rng: stream(seed, Domain::Drift, chunk),
            normal: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma validated")),
            phases: start,
        }
    }

    fn step(&mut self) -> &[f64; DIM] {
        if let Some(normal) = &self.normal {
            for p in self.phases.iter_mut() {
                *p += normal.sample(&mut self.rng);
            }
        }
        &self.phases
    }
}

fn run_chunk(
    app: &Apparatus,
    k: u64,
    total: u64,
    start: [f64; DIM],
    mut visit: impl FnMut(PulseRecord),
) {
    let config = app.config();
    let mut rng = stream(config.seed, Domain::Session, k);
    let sigma = match config.channel.drift {
        PhaseDriftModel::RandomWalk { sigma } => sigma,
        _ => 0.0,
    };
    let mut walk = DriftWalk::new(config.seed, k, sigma, start);
    for t in chunk_range(k, total) {
        let drift = *walk.step();
        let (basis, index, class) = alice_choose(&mut rng, config, t);
        let received = match config.eavesdropper {
            Some(d) => eve_clone_attack(index, d, &mut rng),
            None => index,
        };
        let bob_basis = Basis::ALL[rng.random_range(0..config.n_bases_used)];
        let outcome = bob_measure(app, (basis, received), bob_basis, class, &drift, &mut rng);
        visit(PulseRecord {
            t_index: t,
            alice_basis: basis,
            alice_index: index,
            intensity_class: class,
            bob_basis,
            outcome,
        });
    }
}

/// Every pulse record of the session, in time order. Intended for short
/// sessions; [`run_session`] aggregates without storing records.
pub fn simulate_pulses(config: &ProtocolConfig) -> Result<Vec<PulseRecord>> {
    let app = Apparatus::new(config)?;
    let total = pulse_count(config);
    let chunks = total.div_ceil(CHUNK);
    let starts = chunk_start_phases(config, chunks, total);
    let mut records = Vec::with_capacity(total as usize);
    for k in 0..chunks {
        run_chunk(&app, k, total, starts[k as usize], |r| records.push(r));
    }
    Ok(records)
}

/// Simulates the session on the global thread pool.
pub fn run_session(config: &ProtocolConfig) -> Result<SessionReport> {
    session_inner(config, None)
}

/// Simulates the session on a dedicated pool of `workers` threads. The
/// report does not depend on `workers`.
pub fn run_session_with_workers(config: &ProtocolConfig, workers: usize) -> Result<SessionReport> {
    session_inner(config, Some(workers))
}

fn session_inner(config: &ProtocolConfig, workers: Option<usize>) -> Result<SessionReport> {
    let app = Apparatus::new(config)?;
    let total = pulse_count(config);
    let chunks = total.div_ceil(CHUNK);
    let bins = bin_count(config);
    let tally = with_workers(workers, || {
        let starts = chunk_start_phases(config, chunks, total);
        let parts: Vec<Tally> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut tally = Tally::new(bins);
                run_chunk(&app, k, total, starts[k as usize], |r| {
                    let t = r.t_index as f64 / config.pulse_rate_hz;
                    let bin = ((t / config.bin_s) as usize).min(bins - 1);
                    let error = match r.outcome {
                        Outcome::Click(rail) if r.alice_basis == r.bob_basis => Some(
                            crate::chipmodel::rail_to_index(r.alice_basis, rail) != r.alice_index,
                        ),
                        _ => None,
                    };
                    tally.record(bin, &r, error);
                });
                tally
            })
            .collect();
        parts.into_iter().fold(Tally::new(bins), Tally::merge)
    })?;
    Ok(report(config, tally))
}

fn report(config: &ProtocolConfig, tally: Tally) -> SessionReport {
    let mut rows = Vec::new();
    for (j, pair) in tally.bins.iter().enumerate() {
        for class in IntensityClass::ALL {
            let t = &pair[class.slot()];
            if t.pulses == 0 {
                continue;
            }
            rows.push(SessionBin {
                time_s: j as f64 * config.bin_s,
                intensity_class: class,
                pulses: t.pulses,
                sifted_count: t.sifted,
                errors: t.errors,
                qber: t.qber(),
            });
        }
    }
    let eta = transmittance(&config.channel);
    let estimate = |t: &ClassTotals| {
        if t.pulses == 0 || eta <= 0.0 {
            return None;
        }
        let rate = t.conclusive as f64 / t.pulses as f64;
        (rate < 1.0).then(|| -(-rate).ln_1p() / eta)
    };
    let [signal, decoy] = tally.totals;
    SessionReport {
        bins: rows,
        estimated_mu_signal: estimate(&signal),
        estimated_mu_decoy: estimate(&decoy),
        totals: SessionTotals {
            signal,
            decoy,
            decoy_windows: decoy_window_count(config),
        },
    }
}
