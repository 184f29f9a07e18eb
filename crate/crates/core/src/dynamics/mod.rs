//! Physical transformations on [`KetState`](crate::statekit::KetState)s.
//!
//! Bragg scattering (closed form and a full ladder integrator), resonant
//! Jaynes–Cummings exchange, classical pulses, Ramsey zones, momentum
//! Hadamards, the two-mode beam splitter and photon counting.
//!
//! All rates are angular frequencies in rad/s and durations are seconds;
//! see [`crate::params`] for unit handling.

mod bragg;
mod jc;
mod ladder;
mod optics;
mod oracle;
mod pulse;
mod sweep;

pub use crate::params::PhysicalParams;
pub use bragg::{bragg_closed_form, bragg_closed_form_routed, closed_form_ladder};
pub use jc::jc_resonant;
pub use ladder::{AmplitudeLadder, Branch, LadderArray};
pub use optics::{beam_splitter, detect_photons, postselect_photon_number, DetectionOutcome};
pub use oracle::{bragg_ode_oracle, OracleOptions, OracleRun};
pub use pulse::{
    classical_pulse, momentum_hadamard, ramsey_zone, PulseConvention, PulseSpec, REAL_FLIP_PHI,
};
pub use sweep::{adiabatic_point, adiabatic_sweep, sweep_csv, AdiabaticPoint, SWEEP_CSV_HEADER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statekit::{KetState, StateError, SubsystemKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("subsystem {id:?} has no basis label {label:?}")]
    MissingLabel { id: String, label: String },
    #[error("subsystem {id:?} is a {found}, expected {expected}")]
    WrongKind {
        id: String,
        expected: &'static str,
        found: SubsystemKind,
    },
    #[error("{op}: unsupported sector: {detail}")]
    UnsupportedSector { op: &'static str, detail: String },
    #[error("Bragg regime violated: delta/omega_r = {ratio:.3} < 2")]
    RegimeViolation { ratio: f64 },
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Internal level of a two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InternalLevel {
    G,
    E,
}

impl InternalLevel {
    pub fn label(self) -> &'static str {
        match self {
            InternalLevel::G => "g",
            InternalLevel::E => "e",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            InternalLevel::G => InternalLevel::E,
            InternalLevel::E => InternalLevel::G,
        }
    }
}

impl fmt::Display for InternalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InternalLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "g" => Ok(InternalLevel::G),
            "e" => Ok(InternalLevel::E),
            other => Err(format!("expected g or e, got {other:?}")),
        }
    }
}

/// Subsystem ids of one atom: internal level and momentum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomIds {
    pub internal: String,
    pub momentum: String,
}

impl AtomIds {
    pub fn new(internal: impl Into<String>, momentum: impl Into<String>) -> Self {
        Self {
            internal: internal.into(),
            momentum: momentum.into(),
        }
    }

    /// `<name>.int` and `<name>.mom`.
    pub fn of(name: &str) -> Self {
        Self::new(format!("{name}.int"), format!("{name}.mom"))
    }
}

fn position_of_kind(
    state: &KetState,
    id: &str,
    kinds: &[SubsystemKind],
    expected: &'static str,
) -> Result<usize> {
    let pos = state.position(id)?;
    let kind = state.registry()[pos].kind();
    if !kinds.contains(&kind) {
        return Err(DynamicsError::WrongKind {
            id: id.to_string(),
            expected,
            found: kind,
        });
    }
    Ok(pos)
}

fn label_index(state: &KetState, pos: usize, label: &str) -> Result<u16> {
    let spec = &state.registry()[pos];
    spec.index_of(label)
        .map(|i| i as u16)
        .ok_or_else(|| DynamicsError::MissingLabel {
            id: spec.id().to_string(),
            label: label.to_string(),
        })
}

/// Position plus the (g, e) indices of an internal subsystem.
pub(crate) fn internal_slot(state: &KetState, id: &str) -> Result<(usize, u16, u16)> {
    let pos = position_of_kind(state, id, &[SubsystemKind::AtomInternal], "atom-internal")?;
    Ok((pos, label_index(state, pos, "g")?, label_index(state, pos, "e")?))
}

/// Position plus the (P0, P-2) indices of a momentum subsystem.
pub(crate) fn momentum_slot(state: &KetState, id: &str) -> Result<(usize, u16, u16)> {
    let pos = position_of_kind(state, id, &[SubsystemKind::AtomMomentum], "atom-momentum")?;
    Ok((pos, label_index(state, pos, "P0")?, label_index(state, pos, "P-2")?))
}

/// Position of a Fock mode and its photon number per basis index.
pub(crate) fn mode_slot(state: &KetState, id: &str) -> Result<(usize, Vec<usize>)> {
    let pos = position_of_kind(
        state,
        id,
        &[SubsystemKind::Cavity, SubsystemKind::DetectorMode],
        "cavity or detector mode",
    )?;
    let spec = &state.registry()[pos];
    let numbers = (0..spec.dim())
        .map(|i| {
            spec.photon_number(i).ok_or_else(|| {
                DynamicsError::InvalidArgument(format!("mode {id:?} has a non-numeric label"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pos, numbers))
}

#[cfg(test)]
mod tests;
