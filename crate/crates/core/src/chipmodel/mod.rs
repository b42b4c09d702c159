//! Transfer-matrix model of the transmitter and receiver photonic chips.
//!
//! Both chips are four-rail meshes of Mach–Zehnder interferometers, phase
//! shifters and attenuators. The settings tables below realize each of the
//! twelve protocol states on Alice's chip and each of the three basis
//! measurements on Bob's chip.

mod matrix;
mod solver;
mod topology;

use std::f64::consts::{FRAC_PI_2, PI};

pub use matrix::{mzi_transfer, Mat2, TransferMatrix};
pub use solver::{solve_measurement, solve_settings, solve_settings_with, SolverOptions};
pub use topology::{
    chip_unitary, ChipRole, ChipSettings, ChipTopology, CircuitElement, ElementKind,
};

use crate::error::{Error, Result};
use crate::qstate::{basis_state, Basis, StateVector, DIM};

/// Internal MZI phases `(MZI1, MZI2, MZI3)` and phase shifters `PS1..PS4`
/// per `[basis][index]`, in radians.
const ALICE_TABLE: [[([f64; 3], [f64; 4]); DIM]; 3] = [
    [
        ([PI, FRAC_PI_2, 0.0], [0.0, 0.0, 0.0, 0.0]),
        ([PI, FRAC_PI_2, 0.0], [PI, 0.0, 0.0, 0.0]),
        ([0.0, 0.0, FRAC_PI_2], [0.0, 0.0, 0.0, 0.0]),
        ([0.0, 0.0, FRAC_PI_2], [0.0, 0.0, PI, 0.0]),
    ],
    [
        ([FRAC_PI_2, PI, PI], [0.0, 0.0, 0.0, 0.0]),
        ([FRAC_PI_2, PI, PI], [PI, 0.0, 0.0, 0.0]),
        ([FRAC_PI_2, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]),
        ([FRAC_PI_2, 0.0, 0.0], [0.0, PI, 0.0, 0.0]),
    ],
    [
        ([FRAC_PI_2, PI, 0.0], [0.0, 0.0, 0.0, FRAC_PI_2]),
        ([FRAC_PI_2, PI, 0.0], [FRAC_PI_2, 0.0, 0.0, 0.0]),
        ([FRAC_PI_2, 0.0, PI], [0.0, FRAC_PI_2, 0.0, 0.0]),
        ([FRAC_PI_2, 0.0, PI], [0.0, 0.0, FRAC_PI_2, 0.0]),
    ],
];

/// Phase shifters `PS5..PS8` and MZIs `(MZI5, MZI4, MZI6, MZI7)` per basis.
const BOB_TABLE: [([f64; 4], [f64; 4]); 3] = [
    ([0.0, 0.0, 0.0, 0.0], [PI, FRAC_PI_2, FRAC_PI_2, PI]),
    (
        [0.0, 0.0, FRAC_PI_2, FRAC_PI_2],
        [0.0, FRAC_PI_2, FRAC_PI_2, PI],
    ),
    ([0.0, 0.0, 0.0, 0.0], [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2]),
];

/// Output rail that receives state `i` of each basis on Bob's chip.
const BOB_PERMUTATION: [[usize; DIM]; 3] = [[1, 0, 2, 3], [1, 0, 2, 3], [1, 2, 0, 3]];

/// Alice's settings for state `index` of `basis`, VOA1 at 0 dB.
pub fn alice_settings_for(basis: Basis, index: usize) -> Result<ChipSettings> {
    let (mzi, ps) = ALICE_TABLE[basis.index()]
        .get(index)
        .ok_or_else(|| Error::domain(format!("state index {index} out of range")))?;
    Ok(ChipSettings::new()
        .with("VOA1", 0.0)
        .with("MZI1", mzi[0])
        .with("MZI2", mzi[1])
        .with("MZI3", mzi[2])
        .with("PS1", ps[0])
        .with("PS2", ps[1])
        .with("PS3", ps[2])
        .with("PS4", ps[3]))
}

/// Bob's settings for measuring in `basis`, balancing VOAs at 0 dB.
pub fn bob_settings_for(basis: Basis) -> ChipSettings {
    let (ps, mzi) = BOB_TABLE[basis.index()];
    ChipSettings::new()
        .with("VOA2", 0.0)
        .with("VOA3", 0.0)
        .with("VOA4", 0.0)
        .with("VOA5", 0.0)
        .with("PS5", ps[0])
        .with("PS6", ps[1])
        .with("PS7", ps[2])
        .with("PS8", ps[3])
        .with("MZI5", mzi[0])
        .with("MZI4", mzi[1])
        .with("MZI6", mzi[2])
        .with("MZI7", mzi[3])
}

/// Index → detector rail map of Bob's chip for `basis`.
pub fn bob_permutation(basis: Basis) -> [usize; DIM] {
    BOB_PERMUTATION[basis.index()]
}

/// Logical state index detected on `rail` when measuring in `basis`.
pub fn rail_to_index(basis: Basis, rail: usize) -> usize {
    BOB_PERMUTATION[basis.index()]
        .iter()
        .position(|&r| r == rail)
        .expect("permutation covers every rail")
}

/// Single-rail excitation entering the transmitter.
pub fn transmitter_input() -> StateVector {
    basis_state(0, DIM).expect("rail 0 exists")
}

/// Field leaving Alice's chip for the given settings.
pub fn prepare(settings: &ChipSettings) -> Result<StateVector> {
    Ok(chip_unitary(&ChipTopology::transmitter(), settings)?.apply(&transmitter_input()))
}

/// Bob's transfer matrix when measuring in `basis`.
pub fn bob_unitary(basis: Basis) -> TransferMatrix {
    chip_unitary(&ChipTopology::receiver(), &bob_settings_for(basis))
        .expect("built-in receiver table is complete")
}

/// Highest pulse rate at which every heater has settled, `1 / settle_time`.
pub fn max_repetition_rate(settle_time_s: f64) -> Result<f64> {
    if !(settle_time_s > 0.0) || !settle_time_s.is_finite() {
        return Err(Error::domain(format!(
            "settle time must be positive, got {settle_time_s}"
        )));
    }
    Ok(1.0 / settle_time_s)
}

/// VOA1 attenuation that turns a `mu_signal` pulse into a `mu_decoy` pulse.
pub fn decoy_attenuation_db(mu_signal: f64, mu_decoy: f64) -> Result<f64> {
    if !(mu_decoy > 0.0 && mu_decoy <= mu_signal) {
        return Err(Error::domain("need 0 < mu_decoy <= mu_signal"));
    }
    Ok(10.0 * (mu_signal / mu_decoy).log10())
}
