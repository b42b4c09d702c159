//! State vectors over fiber cores and the three four-dimensional mutually
//! unbiased bases used by the protocol.
//!
//! Core `k` of the multicore fiber carries the computational ket `|k⟩`
//! (`|A⟩..|D⟩` for `k = 0..3`). Every protocol state is an equal-weight
//! superposition of two cores with a relative sign.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for exact constructions.
pub const TOL: f64 = 1e-12;

/// Hilbert-space dimension of the protocol (number of fiber cores used).
pub const DIM: usize = 4;

/// Complex amplitude vector over `dim` spatial modes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds a unit-norm state, rejecting empty or unnormalized input.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::domain(
                "state vector must have at least one amplitude",
            ));
        }
        let s = StateVector { amps };
        let n = s.norm_sq();
        if (n - 1.0).abs() > TOL {
            return Err(Error::domain(format!(
                "state vector norm² is {n}, expected 1"
            )));
        }
        Ok(s)
    }

    /// Wraps raw amplitudes without a norm check.
    ///
    /// Used for field vectors that have passed through lossy elements and for
    /// deliberately malformed inputs in validation code.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Self {
        StateVector { amps }
    }

    /// Builds a state from real amplitudes and normalizes it.
    pub fn from_real_normalized(values: &[f64]) -> Result<Self> {
        let n: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || n == 0.0 {
            return Err(Error::domain("cannot normalize a zero vector"));
        }
        Ok(StateVector {
            amps: values.iter().map(|v| Complex64::new(v / n, 0.0)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> StateVector {
        StateVector {
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Per-mode detection probabilities `|ψ_k|²`.
    pub fn powers(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Hermitian inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::domain(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Amplitudes as `[re, im]` pairs, the JSON wire layout.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.amps.iter().map(|a| [a.re, a.im]).collect()
    }

    /// Inverse of [`StateVector::to_pairs`]; the result must be unit-norm.
    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        StateVector::new(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// Computational basis ket with amplitude 1 at `index`.
pub fn basis_state(index: usize, dim: usize) -> Result<StateVector> {
    if index >= dim {
        return Err(Error::domain(format!(
            "basis index {index} out of range for dimension {dim}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[index] = Complex64::new(1.0, 0.0);
    Ok(StateVector { amps })
}

/// Squared magnitude of the inner product, `|⟨a|b⟩|²`.
pub fn overlap_sq(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// One of the three protocol bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    M0,
    M1,
    M2,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::M0, Basis::M1, Basis::M2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Basis> {
        Basis::ALL.get(i).copied()
    }

    /// Core pairs combined by this basis, in row order.
    ///
    /// Rows `2p` and `2p+1` are the `+` and `−` superpositions of pair `p`.
    pub fn core_pairs(self) -> [(usize, usize); 2] {
        match self {
            Basis::M0 => [(0, 1), (2, 3)],
            Basis::M1 => [(0, 2), (1, 3)],
            Basis::M2 => [(0, 3), (1, 2)],
        }
    }

    /// The `index`-th state of this basis.
    pub fn state(self, index: usize) -> Result<StateVector> {
        if index >= DIM {
            return Err(Error::domain(format!("state index {index} out of range")));
        }
        let (a, b) = self.core_pairs()[index / 2];
        let sign = if index.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut amps = vec![Complex64::new(0.0, 0.0); DIM];
        amps[a] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[b] = Complex64::new(sign * FRAC_1_SQRT_2, 0.0);
        Ok(StateVector { amps })
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M{}", self.index())
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Basis> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M0" | "0" => Ok(Basis::M0),
            "M1" | "1" => Ok(Basis::M1),
            "M2" | "2" => Ok(Basis::M2),
            other => Err(Error::domain(format!("unknown basis `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisLabel {
    Computational,
    Mub(Basis),
}

/// An ordered list of states meant to form an orthonormal basis.
#[derive(Clone, Debug, PartialEq)]
pub struct MubBasis {
    pub label: BasisLabel,
    pub states: Vec<StateVector>,
}

impl MubBasis {
    pub fn new(label: BasisLabel, states: Vec<StateVector>) -> Self {
        MubBasis { label, states }
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, StateVector::dim)
    }

    pub fn protocol(basis: Basis) -> MubBasis {
        let states = (0..DIM)
            .map(|i| basis.state(i).expect("index within DIM"))
            .collect();
        MubBasis::new(BasisLabel::Mub(basis), states)
    }

    pub fn computational(dim: usize) -> MubBasis {
        let states = (0..dim)
            .map(|i| basis_state(i, dim).expect("index within dim"))
            .collect();
        MubBasis::new(BasisLabel::Computational, states)
    }
}

/// Ordered collection of mutually unbiased bases of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct MubSet {
    pub bases: Vec<MubBasis>,
    pub dim: usize,
}

impl MubSet {
    pub fn basis(&self, b: Basis) -> &MubBasis {
        &self.bases[b.index()]
    }

    /// Nested `[basis][state][amplitude] = [re, im]` layout for JSON output.
    pub fn to_nested(&self) -> Vec<Vec<Vec<[f64; 2]>>> {
        self.bases
            .iter()
            .map(|b| b.states.iter().map(StateVector::to_pairs).collect())
            .collect()
    }
}

/// The three-basis set `{M0, M1, M2}` for four cores.
pub fn mub_set_dim4() -> MubSet {
    MubSet {
        bases: Basis::ALL.iter().map(|&b| MubBasis::protocol(b)).collect(),
        dim: DIM,
    }
}

/// True iff every cross overlap between the two bases is `1/N` within `tol`.
pub fn is_mutually_unbiased(b0: &MubBasis, b1: &MubBasis, tol: f64) -> Result<bool> {
    if b0.dim() != b1.dim() {
        return Err(Error::domain(format!(
            "basis dimension mismatch: {} vs {}",
            b0.dim(),
            b1.dim()
        )));
    }
    let target = 1.0 / b0.dim() as f64;
    for a in &b0.states {
        for b in &b1.states {
            if (overlap_sq(a, b)? - target).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff the Gram matrix of the basis is the identity within `tol`.
pub fn is_orthonormal(b: &MubBasis, tol: f64) -> bool {
    for (i, a) in b.states.iter().enumerate() {
        for (j, c) in b.states.iter().enumerate() {
            let Ok(g) = a.inner(c) else {
                return false;
            };
            let expected = if i == j { 1.0 } else { 0.0 };
            if (g - Complex64::new(expected, 0.0)).norm() > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_state_examples() {
        assert_eq!(
            basis_state(0, 4).unwrap().amplitudes(),
            &[c(1.0), c(0.0), c(0.0), c(0.0)]
        );
        assert_eq!(
            basis_state(3, 4).unwrap().amplitudes(),
            &[c(0.0), c(0.0), c(0.0), c(1.0)]
        );
        assert!(matches!(basis_state(4, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn mub_rows_match_table() {
        let set = mub_set_dim4();
        let h = FRAC_1_SQRT_2;
        assert_eq!(set.bases.len(), 3);
        assert_eq!(
            set.basis(Basis::M0).states[0].amplitudes(),
            &[c(h), c(h), c(0.0), c(0.0)]
        );
        assert_eq!(
            set.basis(Basis::M0).states[3].amplitudes(),
            &[c(0.0), c(0.0), c(h), c(-h)]
        );
        assert_eq!(
            set.basis(Basis::M1).states[2].amplitudes(),
            &[c(0.0), c(h), c(0.0), c(h)]
        );
        assert_eq!(
            set.basis(Basis::M2).states[1].amplitudes(),
            &[c(h), c(0.0), c(0.0), c(-h)]
        );
        assert_eq!(
            set.basis(Basis::M2).states[3].amplitudes(),
            &[c(0.0), c(h), c(-h), c(0.0)]
        );
    }

    #[test]
    fn overlap_examples() {
        let set = mub_set_dim4();
        let m0 = &set.basis(Basis::M0).states;
        let m1 = &set.basis(Basis::M1).states;
        let m2 = &set.basis(Basis::M2).states;
        assert!((overlap_sq(&m0[0], &m0[0]).unwrap() - 1.0).abs() < TOL);
        assert!(overlap_sq(&m0[0], &m0[1]).unwrap().abs() < TOL);
        assert!((overlap_sq(&m0[0], &m1[0]).unwrap() - 0.25).abs() < TOL);
        assert!((overlap_sq(&m0[0], &m2[1]).unwrap() - 0.25).abs() < TOL);
        let short = basis_state(0, 3).unwrap();
        assert!(overlap_sq(&m0[0], &short).is_err());
    }

    #[test]
    fn unbiasedness_examples() {
        let set = mub_set_dim4();
        let m0 = set.basis(Basis::M0);
        let m1 = set.basis(Basis::M1);
        assert!(is_mutually_unbiased(m0, m1, TOL).unwrap());
        assert!(!is_mutually_unbiased(m0, m0, TOL).unwrap());
        assert!(!is_mutually_unbiased(&MubBasis::computational(4), m0, TOL).unwrap());
        assert!(is_mutually_unbiased(&MubBasis::computational(3), m0, TOL).is_err());
    }

    #[test]
    fn orthonormal_examples() {
        let set = mub_set_dim4();
        for b in &set.bases {
            assert!(is_orthonormal(b, TOL));
        }
        let mut dup = set.basis(Basis::M0).clone();
        dup.states[1] = dup.states[0].clone();
        assert!(!is_orthonormal(&dup, TOL));

        let mut shrunk = set.basis(Basis::M1).clone();
        shrunk.states[2] = shrunk.states[2].scaled(c(0.9));
        assert!(!is_orthonormal(&shrunk, TOL));
    }

    #[test]
    fn all_cross_pairs_quarter() {
        let set = mub_set_dim4();
        let mut checked = 0;
        for (i, bi) in set.bases.iter().enumerate() {
            for bj in &set.bases[i + 1..] {
                for a in &bi.states {
                    for b in &bj.states {
                        assert!((overlap_sq(a, b).unwrap() - 0.25).abs() < TOL);
                        checked += 1;
                    }
                }
            }
        }
        assert_eq!(checked, 48);
    }

    #[test]
    fn new_rejects_unnormalized() {
        assert!(StateVector::new(vec![c(1.0), c(1.0)]).is_err());
        assert!(StateVector::new(vec![]).is_err());
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4).prop_filter_map("non-zero", |v| {
            let amps: Vec<Complex64> = v.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
            let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            (n > 1e-3).then(|| StateVector::from_amplitudes(amps.iter().map(|a| a / n).collect()))
        })
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric(a in arb_state(), b in arb_state()) {
            let ab = overlap_sq(&a, &b).unwrap();
            let ba = overlap_sq(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < TOL);
            prop_assert!((-TOL..=1.0 + TOL).contains(&ab));
        }

        #[test]
        fn overlap_ignores_global_phase(a in arb_state(), b in arb_state(), p in 0.0f64..6.3, q in 0.0f64..6.3) {
            let base = overlap_sq(&a, &b).unwrap();
            let rotated = overlap_sq(
                &a.scaled(Complex64::from_polar(1.0, p)),
                &b.scaled(Complex64::from_polar(1.0, q)),
            ).unwrap();
            prop_assert!((base - rotated).abs() < TOL);
        }
    }
}
