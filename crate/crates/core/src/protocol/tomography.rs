use rayon::prelude::*;
use serde::Serialize;

use super::streams::{stream, with_workers, Domain};
use super::{bob_measure, eve_clone_attack, Apparatus, IntensityClass, Outcome, ProtocolConfig};
use crate::chipmodel::rail_to_index;
use crate::error::{Error, Result};
use crate::qstate::{Basis, DIM};

/// Row and column labels, basis-major.
pub const CELL_LABELS: [&str; 12] = [
    "M0_0", "M0_1", "M0_2", "M0_3", "M1_0", "M1_1", "M1_2", "M1_3", "M2_0", "M2_1", "M2_2", "M2_3",
];

/// Pulses drawn per batch while filling a cell.
const BATCH: u64 = 4096;

/// Conditional detection probabilities: entry `[(b,i)][(b',j)]` estimates the
/// probability that Bob, measuring in `b'`, records logical outcome `j` given a
/// conclusive event when Alice sent state `i` of basis `b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyMatrix {
    pub entries: [[f64; 12]; 12],
    /// Pulses spent on each `(prepared, measured basis)` cell.
    pub pulses: [[u64; 3]; 12],
}

impl TomographyMatrix {
    pub fn max_abs_deviation(&self, other: &[[f64; 12]; 12]) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Noise-free expectation: identity on same-basis blocks, 1/4 elsewhere.
pub fn theory_matrix() -> [[f64; 12]; 12] {
    let mut m = [[0.0; 12]; 12];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = if r / DIM != c / DIM {
                0.25
            } else if r == c {
                1.0
            } else {
                0.0
            };
        }
    }
    m
}

/// Fills each cell with exactly `detections_per_cell` conclusive events at
/// intensity `mu_signal`, in every basis regardless of `n_bases_used`.
pub fn tomography(config: &ProtocolConfig, detections_per_cell: u64) -> Result<TomographyMatrix> {
    tomography_inner(config, detections_per_cell, None)
}

pub fn tomography_with_workers(
    config: &ProtocolConfig,
    detections_per_cell: u64,
    workers: usize,
) -> Result<TomographyMatrix> {
    tomography_inner(config, detections_per_cell, Some(workers))
}

fn tomography_inner(
    config: &ProtocolConfig,
    detections_per_cell: u64,
    workers: Option<usize>,
) -> Result<TomographyMatrix> {
    if detections_per_cell == 0 {
        return Err(Error::invalid("detections_per_cell", "must be ≥ 1"));
    }
    let app = Apparatus::new(config)?;
    let cells: Vec<(usize, usize)> = (0..12).flat_map(|r| (0..3).map(move |b| (r, b))).collect();
    let results = with_workers(workers, || {
        cells
            .par_iter()
            .map(|&(row, mb)| fill_cell(&app, row, mb, detections_per_cell))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut m = TomographyMatrix {
        entries: [[0.0; 12]; 12],
        pulses: [[0; 3]; 12],
    };
    for ((row, mb), (hist, pulses)) in cells.into_iter().zip(results) {
        for (j, &h) in hist.iter().enumerate() {
            m.entries[row][mb * DIM + j] = h as f64 / detections_per_cell as f64;
        }
        m.pulses[row][mb] = pulses;
    }
    Ok(m)
}

fn fill_cell(app: &Apparatus, row: usize, mb: usize, target: u64) -> Result<([u64; DIM], u64)> {
    let config = app.config();
    let basis = Basis::ALL[row / DIM];
    let index = row % DIM;
    let bob_basis = Basis::ALL[mb];
    let cell = (row * 3 + mb) as u64;
    let cap = target.saturating_mul(10_000).max(1 << 20);
    let drift = config_drift(config);
    let mut hist = [0u64; DIM];
    let mut found = 0;
    let mut pulses = 0u64;
    let mut batch = 0u64;
    while found < target {
        if pulses >= cap {
            return Err(Error::Estimation(format!(
                "cell {}/{}: only {found} conclusive events in {pulses} pulses",
                CELL_LABELS[row], bob_basis
            )));
        }
        let mut rng = stream(config.seed, Domain::Tomography, (cell << 40) | batch);
        for _ in 0..BATCH {
            pulses += 1;
            let received = match config.eavesdropper {
                Some(d) => eve_clone_attack(index, d, &mut rng),
                None => index,
            };
            let o = bob_measure(
                app,
                (basis, received),
                bob_basis,
                IntensityClass::Signal,
                &drift,
                &mut rng,
            );
            if let Outcome::Click(rail) = o {
                hist[rail_to_index(bob_basis, rail)] += 1;
                found += 1;
                if found == target {
                    break;
                }
            }
        }
        batch += 1;
    }
    Ok((hist, pulses))
}

/// Tomography integrates over a stable link, so only static offsets apply.
fn config_drift(config: &ProtocolConfig) -> [f64; DIM] {
    match config.channel.drift {
        crate::channel::PhaseDriftModel::FixedOffsets { phases } => phases,
        _ => [0.0; DIM],
    }
}
