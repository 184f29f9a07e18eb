//! End-to-end pipelines built from the dynamics primitives.
//!
//! Every pipeline returns a [`PipelineTrace`] that snapshots the state after
//! each primitive, so intermediate states can be checked one by one.
//!
//! | pipeline | entry point |
//! |---|---|
//! | hyperentangled pair | [`generate_hyper_bell_pair`] |
//! | entanglement swapping | [`swap_entanglement`], [`enumerate_swap_outcomes`] |
//! | photonic swapping | [`delayed_choice_swap`], [`delayed_choice_hyper`] |
//! | n atoms | [`npartite_generate`], [`npartite_swap`] |

mod delayed;
mod generate;
mod report;
pub mod reference;
mod swap;
mod trace;

pub use delayed::{
    delayed_choice_hyper, delayed_choice_swap, npartite_arms, npartite_generate, npartite_swap,
    Detector, MAX_ATOMS,
};
pub use generate::{generate_hyper_bell_pair, generate_hyper_bell_pair_with, PairConventions, PairLayout};
pub use report::{OutcomeProbability, PipelineReport, StepReport};
pub use swap::{
    enumerate_swap_outcomes, enumerate_swap_outcomes_for, swap_entanglement, AtomOutcome, DetectionPlan, Momentum, SwapOutcomeRow,
    PAIRS_STEP,
};
pub use trace::{PipelineTrace, StepKind, TraceStep};
pub(crate) use trace::Tracer;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{AtomIds, DynamicsError, InternalLevel};
use crate::metrics::MetricsError;
use crate::statekit::{BasisConfig, KetState, StateError, SubsystemSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("duplicate step label {0:?}")]
    DuplicateLabel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// One atom in `|level, momentum⟩` with ids `<name>.int`, `<name>.mom`.
pub fn atom_ket(name: &str, level: InternalLevel, momentum: &str) -> Result<KetState> {
    let ids = AtomIds::of(name);
    let registry = vec![
        SubsystemSpec::atom_internal(&ids.internal),
        SubsystemSpec::atom_momentum(&ids.momentum),
    ];
    let cfg = BasisConfig::new()
        .with(&ids.internal, level.label())
        .with(&ids.momentum, momentum);
    Ok(KetState::basis(registry, cfg)?)
}

/// Auxiliary two-level atom without tracked momentum.
pub fn internal_ket(id: &str, level: InternalLevel) -> Result<KetState> {
    let cfg = BasisConfig::new().with(id, level.label());
    Ok(KetState::basis(vec![SubsystemSpec::atom_internal(id)], cfg)?)
}

/// Single-photon-cutoff cavity in `(|0⟩ + |1⟩)/√2`.
pub fn cavity_plus(id: &str) -> Result<KetState> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(KetState::new(
        vec![SubsystemSpec::cavity(id, 1)?],
        vec![
            (BasisConfig::new().with(id, "0"), h),
            (BasisConfig::new().with(id, "1"), h),
        ],
        false,
    )?)
}
