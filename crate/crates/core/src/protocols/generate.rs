use crate::dynamics::{
    bragg_closed_form, classical_pulse, jc_resonant, ramsey_zone, AtomIds, InternalLevel,
    PulseSpec,
};
use crate::params::PhysicalParams;

use super::trace::{StepKind, Tracer};
use super::{atom_ket, cavity_plus, internal_ket, PipelineTrace, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PairConventions {
    /// Pulse applied to each atom right after its Bragg step.
    pub arm_pulse: PulseSpec,
    /// `None` uses the full-transfer time `π/(2β)`.
    pub bragg_duration: Option<f64>,
}

impl Default for PairConventions {
    fn default() -> Self {
        Self {
            arm_pulse: PulseSpec::pi_real_flip("P-2"),
            bragg_duration: None,
        }
    }
}

/// Subsystem names for one pair. Atoms are injected in `atoms` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairLayout {
    pub atoms: [String; 2],
    pub cavity: String,
    pub aux: String,
}

impl PairLayout {
    pub fn new(first: &str, second: &str, cavity: &str, aux: &str) -> Self {
        Self {
            atoms: [first.to_string(), second.to_string()],
            cavity: cavity.to_string(),
            aux: aux.to_string(),
        }
    }
}

impl Default for PairLayout {
    fn default() -> Self {
        Self::new("a1", "a2", "c", "x")
    }
}

/// Hyperentangled atom pair via a shared cavity and auxiliary-atom readout.
pub fn generate_hyper_bell_pair(
    params: &PhysicalParams,
    conventions: &PairConventions,
    aux_outcome: InternalLevel,
) -> Result<PipelineTrace> {
    generate_hyper_bell_pair_with(params, conventions, aux_outcome, &PairLayout::default())
}

pub fn generate_hyper_bell_pair_with(
    params: &PhysicalParams,
    conventions: &PairConventions,
    aux_outcome: InternalLevel,
    layout: &PairLayout,
) -> Result<PipelineTrace> {
    let duration = conventions.bragg_duration.unwrap_or_else(|| params.bragg_time());
    let cav = layout.cavity.as_str();
    let mut initial = cavity_plus(cav)?;
    for a in &layout.atoms {
        initial = initial.tensor(&atom_ket(a, InternalLevel::G, "P0")?)?;
    }
    let mut t = Tracer::start("generate", "prepare", initial);

    for a in &layout.atoms {
        let ids = AtomIds::of(a);
        let (int, mom) = (ids.internal.as_str(), ids.momentum.as_str());
        t.apply(&format!("bragg {a}"), StepKind::Bragg, &[int, mom, cav], |s| {
            bragg_closed_form(s, &ids, cav, params, duration)
        })?;
        t.apply(&format!("pulse {a}"), StepKind::Pulse, &[int, mom], |s| {
            classical_pulse(s, &ids, &conventions.arm_pulse)
        })?;
    }

    let aux = layout.aux.as_str();
    t.inject(&format!("inject {aux}"), &internal_ket(aux, InternalLevel::G)?)?;
    t.apply(&format!("exchange {aux}"), StepKind::Exchange, &[aux, cav], |s| {
        jc_resonant(s, aux, cav, params, params.jc_transfer_time())
    })?;
    t.apply(&format!("ramsey {aux}"), StepKind::Ramsey, &[aux], |s| ramsey_zone(s, aux))?;
    if t.measure(&format!("detect {aux}"), &[aux], &[aux_outcome.label()])? {
        t.drop(&format!("drop {aux} {cav}"), &[aux, cav])?;
    }
    Ok(t.finish())
}
