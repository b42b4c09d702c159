use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{mzi_transfer, TransferMatrix};
use crate::error::{Error, Result};
use crate::qstate::DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    /// Interferometer coupling rails `upper` and `lower`; set by its internal phase.
    Mzi { upper: usize, lower: usize },
    /// Thermo-optic phase shifter on one rail; set in radians.
    PhaseShifter { rail: usize },
    /// Variable optical attenuator on one rail; set in dB (≥ 0).
    Voa { rail: usize },
}

impl ElementKind {
    fn rails(&self) -> Vec<usize> {
        match *self {
            ElementKind::Mzi { upper, lower } => vec![upper, lower],
            ElementKind::PhaseShifter { rail } | ElementKind::Voa { rail } => vec![rail],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitElement {
    pub id: String,
    pub kind: ElementKind,
    pub stage: usize,
}

impl CircuitElement {
    pub fn new(id: &str, kind: ElementKind, stage: usize) -> Self {
        CircuitElement {
            id: id.to_string(),
            kind,
            stage,
        }
    }

    /// 4×4 transfer matrix of this element at the given setting.
    pub fn transfer(&self, value: f64) -> Result<TransferMatrix> {
        Ok(match self.kind {
            ElementKind::Mzi { upper, lower } => {
                TransferMatrix::embed(&mzi_transfer(value), upper, lower)
            }
            ElementKind::PhaseShifter { rail } => {
                let mut d = [Complex64::new(1.0, 0.0); DIM];
                d[rail] = Complex64::from_polar(1.0, value);
                TransferMatrix::diagonal(d)
            }
            ElementKind::Voa { rail } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::Configuration(format!(
                        "{}: attenuation must be a finite value ≥ 0 dB, got {value}",
                        self.id
                    )));
                }
                let mut d = [Complex64::new(1.0, 0.0); DIM];
                d[rail] = Complex64::new(10f64.powf(-value / 20.0), 0.0);
                TransferMatrix::diagonal(d)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChipRole {
    Transmitter,
    Receiver,
}

/// Feed-forward mesh of elements over four rails.
///
/// Elements are applied in ascending stage order. Elements sharing a stage
/// must touch disjoint rails, so the order inside a stage is immaterial.
#[derive(Clone, Debug, PartialEq)]
pub struct ChipTopology {
    role: ChipRole,
    elements: Vec<CircuitElement>,
}

impl ChipTopology {
    pub fn new(role: ChipRole, mut elements: Vec<CircuitElement>) -> Result<Self> {
        let mut ids = HashSet::new();
        for e in &elements {
            if !ids.insert(e.id.clone()) {
                return Err(Error::Configuration(format!(
                    "duplicate element id `{}`",
                    e.id
                )));
            }
            let rails = e.kind.rails();
            if rails.iter().any(|&r| r >= DIM) {
                return Err(Error::Configuration(format!(
                    "{}: rail index out of range",
                    e.id
                )));
            }
            if rails.len() == 2 && rails[0] == rails[1] {
                return Err(Error::Configuration(format!(
                    "{}: interferometer rails must be distinct",
                    e.id
                )));
            }
        }
        elements.sort_by_key(|e| e.stage);
        let mut i = 0;
        while i < elements.len() {
            let stage = elements[i].stage;
            let mut used = HashSet::new();
            while i < elements.len() && elements[i].stage == stage {
                for r in elements[i].kind.rails() {
                    if !used.insert(r) {
                        return Err(Error::Configuration(format!(
                            "stage {stage}: rail {r} is driven by more than one element"
                        )));
                    }
                }
                i += 1;
            }
        }
        Ok(ChipTopology { role, elements })
    }

    pub fn empty(role: ChipRole) -> Self {
        ChipTopology {
            role,
            elements: Vec::new(),
        }
    }

    /// Alice's chip: input attenuator, a splitter across the two halves of
    /// the core array, one splitter per half, then a phase shifter per rail.
    pub fn transmitter() -> Self {
        use ElementKind::*;
        let elements = vec![
            CircuitElement::new("VOA1", Voa { rail: 0 }, 0),
            CircuitElement::new("MZI1", Mzi { upper: 0, lower: 2 }, 1),
            CircuitElement::new("MZI2", Mzi { upper: 0, lower: 1 }, 2),
            CircuitElement::new("MZI3", Mzi { upper: 2, lower: 3 }, 2),
            CircuitElement::new("PS1", PhaseShifter { rail: 0 }, 3),
            CircuitElement::new("PS2", PhaseShifter { rail: 1 }, 3),
            CircuitElement::new("PS3", PhaseShifter { rail: 2 }, 3),
            CircuitElement::new("PS4", PhaseShifter { rail: 3 }, 3),
        ];
        ChipTopology::new(ChipRole::Transmitter, elements).expect("built-in transmitter is valid")
    }

    /// Bob's chip: per-rail balancing attenuators and phase shifters, a
    /// bar/cross switch on the middle rails, then the combining stage.
    ///
    /// The routing is a functional reconstruction: it is the smallest mesh of
    /// this shape that separates each of the three bases onto distinct rails.
    pub fn receiver() -> Self {
        use ElementKind::*;
        let elements = vec![
            CircuitElement::new("VOA2", Voa { rail: 0 }, 0),
            CircuitElement::new("VOA3", Voa { rail: 1 }, 0),
            CircuitElement::new("VOA4", Voa { rail: 2 }, 0),
            CircuitElement::new("VOA5", Voa { rail: 3 }, 0),
            CircuitElement::new("PS5", PhaseShifter { rail: 0 }, 1),
            CircuitElement::new("PS6", PhaseShifter { rail: 1 }, 1),
            CircuitElement::new("PS7", PhaseShifter { rail: 2 }, 1),
            CircuitElement::new("PS8", PhaseShifter { rail: 3 }, 1),
            CircuitElement::new("MZI5", Mzi { upper: 1, lower: 2 }, 2),
            CircuitElement::new("MZI4", Mzi { upper: 0, lower: 1 }, 3),
            CircuitElement::new("MZI6", Mzi { upper: 2, lower: 3 }, 3),
            CircuitElement::new("MZI7", Mzi { upper: 1, lower: 2 }, 4),
        ];
        ChipTopology::new(ChipRole::Receiver, elements).expect("built-in receiver is valid")
    }

    pub fn role(&self) -> ChipRole {
        self.role
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn element(&self, id: &str) -> Option<&CircuitElement> {
        self.elements.iter().find(|e| e.id == id)
    }
}

/// Concrete value for every element of a topology: radians for MZIs and phase
/// shifters, dB for attenuators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChipSettings(pub BTreeMap<String, f64>);

impl ChipSettings {
    pub fn new() -> Self {
        ChipSettings(BTreeMap::new())
    }

    pub fn with(mut self, id: &str, value: f64) -> Self {
        self.0.insert(id.to_string(), value);
        self
    }

    pub fn set(&mut self, id: &str, value: f64) {
        self.0.insert(id.to_string(), value);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }

    /// Zero phase and zero attenuation on every element.
    pub fn neutral(topology: &ChipTopology) -> Self {
        ChipSettings(
            topology
                .elements()
                .iter()
                .map(|e| (e.id.clone(), 0.0))
                .collect(),
        )
    }
}

/// Composes the element matrices of `topology` in stage order.
pub fn chip_unitary(topology: &ChipTopology, settings: &ChipSettings) -> Result<TransferMatrix> {
    for id in settings.0.keys() {
        if topology.element(id).is_none() {
            return Err(Error::Configuration(format!(
                "setting for unknown element `{id}`"
            )));
        }
    }
    let mut u = TransferMatrix::identity();
    for e in topology.elements() {
        let value = settings
            .get(&e.id)
            .ok_or_else(|| Error::Configuration(format!("missing setting for `{}`", e.id)))?;
        u = e.transfer(value)? * u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn empty_topology_is_identity() {
        let u = chip_unitary(
            &ChipTopology::empty(ChipRole::Transmitter),
            &ChipSettings::new(),
        )
        .unwrap();
        assert_eq!(u, TransferMatrix::identity());
    }

    #[test]
    fn single_mzi_embeds_in_top_left() {
        let topo = ChipTopology::new(
            ChipRole::Transmitter,
            vec![CircuitElement::new(
                "M",
                ElementKind::Mzi { upper: 0, lower: 1 },
                0,
            )],
        )
        .unwrap();
        let u = chip_unitary(&topo, &ChipSettings::new().with("M", PI / 2.0)).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((u.entry(r, c).norm() - FRAC_1_SQRT_2).abs() < 1e-15);
            }
        }
        for r in 2..4 {
            for c in 0..4 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((u.entry(r, c) - Complex64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn missing_or_unknown_setting_is_rejected() {
        let topo = ChipTopology::transmitter();
        let mut s = ChipSettings::neutral(&topo);
        s.0.remove("PS3");
        assert!(matches!(
            chip_unitary(&topo, &s),
            Err(Error::Configuration(_))
        ));
        let s = ChipSettings::neutral(&topo).with("MZI9", 0.0);
        assert!(matches!(
            chip_unitary(&topo, &s),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn negative_attenuation_is_rejected() {
        let topo = ChipTopology::transmitter();
        let s = ChipSettings::neutral(&topo).with("VOA1", -1.0);
        assert!(chip_unitary(&topo, &s).is_err());
    }

    #[test]
    fn invalid_topologies_are_rejected() {
        use ElementKind::*;
        let same_rail = vec![CircuitElement::new("M", Mzi { upper: 1, lower: 1 }, 0)];
        assert!(ChipTopology::new(ChipRole::Receiver, same_rail).is_err());
        let out_of_range = vec![CircuitElement::new("P", PhaseShifter { rail: 4 }, 0)];
        assert!(ChipTopology::new(ChipRole::Receiver, out_of_range).is_err());
        let clash = vec![
            CircuitElement::new("M", Mzi { upper: 0, lower: 1 }, 0),
            CircuitElement::new("P", PhaseShifter { rail: 1 }, 0),
        ];
        assert!(ChipTopology::new(ChipRole::Receiver, clash).is_err());
        let dup = vec![
            CircuitElement::new("P", PhaseShifter { rail: 0 }, 0),
            CircuitElement::new("P", PhaseShifter { rail: 1 }, 1),
        ];
        assert!(ChipTopology::new(ChipRole::Receiver, dup).is_err());
    }

    #[test]
    fn voa_scales_rail_power() {
        let topo = ChipTopology::receiver();
        let base = ChipSettings::neutral(&topo);
        let psi = crate::qstate::Basis::M1.state(0).unwrap();
        let p0 = chip_unitary(&topo, &base).unwrap().apply(&psi).powers();
        for db in [0.5, 3.0, 10.0] {
            let s = base.clone().with("VOA4", db);
            let u = chip_unitary(&topo, &s).unwrap();
            // attenuate the input rail 2 only; with neutral settings rail 2
            // maps to a single output rail
            let p = u.apply(&psi).powers();
            let total0: f64 = p0.iter().sum();
            let total: f64 = p.iter().sum();
            let lost = total0 - total;
            assert!((lost - 0.5 * (1.0 - 10f64.powf(-db / 10.0))).abs() < 1e-12);
        }
    }
}
