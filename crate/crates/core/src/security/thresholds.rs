use serde::Serialize;

use super::{mutual_info_ab, mutual_info_ae};
use crate::error::{Error, Result};
use crate::roots::{bisect, is_non_increasing};

const ROOT_TOL: f64 = 1e-9;

/// Dimensions tabulated by [`threshold_table`].
pub const TABLE_DIMENSIONS: [usize; 5] = [2, 3, 4, 5, 8];

/// Individual-attack limits for a full set of `N+1` bases, in percent. These
/// are published reference values, not computed here.
const FULL_SET_REFERENCE: [(usize, f64); 5] =
    [(2, 15.64), (3, 22.67), (4, 26.66), (5, 29.23), (8, 33.44)];

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be ≥ 2, got {n}")));
    }
    Ok(())
}

fn root_in_disturbance<F: Fn(f64) -> f64>(g: F, what: &str) -> Result<f64> {
    if !is_non_increasing(&g, 0.0, 0.5, 257) {
        return Err(Error::domain(format!(
            "{what}: margin is not monotone on [0, 0.5]"
        )));
    }
    Ok(100.0 * bisect(g, 0.0, 0.5, ROOT_TOL)?)
}

/// Largest disturbance (percent) at which `I_AB ≥ I_AE` for two bases under
/// individual attacks.
pub fn threshold_individual_2mub(n: usize) -> Result<f64> {
    check_dim(n)?;
    root_in_disturbance(
        |d| mutual_info_ab(1.0 - d, n) - mutual_info_ae(1.0 - d, n),
        "individual threshold",
    )
}

/// Largest disturbance (percent) satisfying the coherent-attack condition
/// `I_AB ≥ log₂(N)/2`.
pub fn threshold_coherent(n: usize) -> Result<f64> {
    check_dim(n)?;
    let half = 0.5 * (n as f64).log2();
    root_in_disturbance(|d| mutual_info_ab(1.0 - d, n) - half, "coherent threshold")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub d2_individual: f64,
    pub dn1_individual: f64,
    pub d_coherent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdTable {
    pub fn row(&self, n: usize) -> Option<&ThresholdRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Disturbance limits for `N ∈ {2, 3, 4, 5, 8}`.
pub fn threshold_table() -> Result<ThresholdTable> {
    let rows = FULL_SET_REFERENCE
        .iter()
        .map(|&(n, full)| {
            Ok(ThresholdRow {
                n,
                d2_individual: threshold_individual_2mub(n)?,
                dn1_individual: full,
                d_coherent: threshold_coherent(n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdTable { rows })
}
