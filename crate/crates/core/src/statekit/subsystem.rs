use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::StateError;

/// What physical degree of freedom a subsystem carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsystemKind {
    AtomInternal,
    AtomMomentum,
    Cavity,
    DetectorMode,
}

impl fmt::Display for SubsystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubsystemKind::AtomInternal => "atom-internal",
            SubsystemKind::AtomMomentum => "atom-momentum",
            SubsystemKind::Cavity => "cavity",
            SubsystemKind::DetectorMode => "detector-mode",
        };
        f.write_str(s)
    }
}

/// A named degree of freedom with a finite, ordered basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemSpec {
    id: String,
    kind: SubsystemKind,
    basis: Vec<String>,
}

/// Label used for the momentum state `P_l`.
pub fn momentum_label(l: i32) -> String {
    format!("P{l}")
}

/// Parse a momentum label such as `P-2` back to its integer order.
pub fn parse_momentum_label(label: &str) -> Option<i32> {
    label.strip_prefix('P')?.parse().ok()
}

impl SubsystemSpec {
    pub fn new(
        id: impl Into<String>,
        kind: SubsystemKind,
        basis: Vec<String>,
    ) -> Result<Self, StateError> {
        let id = id.into();
        if id.is_empty() {
            return Err(StateError::InvalidSubsystem {
                id,
                reason: "empty id".into(),
            });
        }
        if basis.len() < 2 {
            return Err(StateError::InvalidSubsystem {
                id,
                reason: format!("basis dimension {} < 2", basis.len()),
            });
        }
        let mut seen = HashSet::new();
        for label in &basis {
            if !seen.insert(label.as_str()) {
                return Err(StateError::InvalidSubsystem {
                    id,
                    reason: format!("duplicate basis label {label:?}"),
                });
            }
        }
        if basis.len() > u16::MAX as usize {
            return Err(StateError::InvalidSubsystem {
                id,
                reason: "basis too large".into(),
            });
        }
        Ok(Self { id, kind, basis })
    }

    /// Two-level internal state `{g, e}`.
    pub fn atom_internal(id: impl Into<String>) -> Self {
        Self::new(id, SubsystemKind::AtomInternal, vec!["g".into(), "e".into()])
            .expect("static basis is valid")
    }

    /// The first-order Bragg pair `{P0, P-2}`.
    pub fn atom_momentum(id: impl Into<String>) -> Self {
        Self::new(
            id,
            SubsystemKind::AtomMomentum,
            vec![momentum_label(0), momentum_label(-2)],
        )
        .expect("static basis is valid")
    }

    /// Even momentum ladder `P{lmin} .. P{lmax}`, both inclusive.
    pub fn momentum_ladder(id: impl Into<String>, lmin: i32, lmax: i32) -> Result<Self, StateError> {
        let basis = (lmin..=lmax)
            .filter(|l| l % 2 == 0)
            .map(momentum_label)
            .collect();
        Self::new(id, SubsystemKind::AtomMomentum, basis)
    }

    /// Fock space `0 ..= n_max` of a cavity mode.
    pub fn cavity(id: impl Into<String>, n_max: usize) -> Result<Self, StateError> {
        Self::new(
            id,
            SubsystemKind::Cavity,
            (0..=n_max).map(|n| n.to_string()).collect(),
        )
    }

    /// Fock space `0 ..= n_max` of a detector (beam-splitter output) mode.
    pub fn detector(id: impl Into<String>, n_max: usize) -> Result<Self, StateError> {
        Self::new(
            id,
            SubsystemKind::DetectorMode,
            (0..=n_max).map(|n| n.to_string()).collect(),
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> SubsystemKind {
        self.kind
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.basis[index]
    }

    /// Photon number for a mode subsystem, `None` for atoms.
    pub fn photon_number(&self, index: usize) -> Option<usize> {
        match self.kind {
            SubsystemKind::Cavity | SubsystemKind::DetectorMode => self.basis[index].parse().ok(),
            _ => None,
        }
    }

    pub(crate) fn with_id(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: self.kind,
            basis: self.basis.clone(),
        }
    }
}

/// A full assignment subsystem-id → basis label.
///
/// Order is preserved as given; [`super::KetState`] re-orders to its registry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BasisConfig(Vec<(String, String)>);

impl BasisConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, label: impl Into<String>) -> Self {
        self.0.push((id.into(), label.into()));
        self
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self(pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect())
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, l)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
