//! Sparse composite kets over labelled subsystems.
//!
//! A [`KetState`] maps basis configurations (one label per registered
//! subsystem) to complex amplitudes. Everything the protocol layer does,
//! from Bragg propagators to photon detection, is expressed as a
//! transformation of these maps.

mod density;
mod ket;
mod serial;
mod subsystem;

pub use density::{hermitian_eigenvalues, DensityMatrix};
pub(crate) use ket::Config;
pub use ket::{ConfigRef, KetState, NormTag, Projection, NORM_TOLERANCE, PRUNE_THRESHOLD};
pub use subsystem::{momentum_label, parse_momentum_label, BasisConfig, SubsystemKind, SubsystemSpec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("invalid subsystem {id:?}: {reason}")]
    InvalidSubsystem { id: String, reason: String },
    #[error("duplicate subsystem id {0:?}")]
    DuplicateId(String),
    #[error("unknown subsystem {0:?}")]
    UnknownSubsystem(String),
    #[error("label {label:?} is not in the basis of {id:?}")]
    UnknownLabel { id: String, label: String },
    #[error("incomplete configuration: {0}")]
    IncompleteConfig(String),
    #[error("no terms given")]
    EmptyTerms,
    #[error("state has zero norm")]
    ZeroState,
    #[error("operator is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),
    #[error("operator dimension {got} does not match target space {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subsystem {id:?} is entangled with the rest (purity {purity})")]
    NotProduct { id: String, purity: f64 },
    #[error("registries differ: {0}")]
    RegistryMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state parse error: {0}")]
    Parse(String),
}

#[cfg(test)]
mod tests;
