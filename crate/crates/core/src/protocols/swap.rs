use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    bragg_closed_form_routed, jc_resonant, ramsey_zone, AtomIds, InternalLevel,
};
use crate::metrics::entanglement_entropy;
use crate::params::PhysicalParams;
use crate::statekit::KetState;

use super::trace::{StepKind, Tracer};
use super::{
    cavity_plus, generate_hyper_bell_pair_with, internal_ket, Detector, PairConventions,
    PairLayout, PipelineTrace, ProtocolError, Result,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Momentum {
    #[serde(rename = "P0")]
    P0,
    #[serde(rename = "P-2")]
    Pm2,
}

impl Momentum {
    pub fn label(self) -> &'static str {
        match self {
            Momentum::P0 => "P0",
            Momentum::Pm2 => "P-2",
        }
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Momentum {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "P0" => Ok(Momentum::P0),
            "P-2" => Ok(Momentum::Pm2),
            other => Err(format!("expected P0 or P-2, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomOutcome {
    pub internal: InternalLevel,
    pub momentum: Momentum,
}

impl AtomOutcome {
    pub fn new(internal: InternalLevel, momentum: Momentum) -> Self {
        Self { internal, momentum }
    }
}

/// Announced outcomes that select one branch of a swapping pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectionPlan {
    pub atom2: AtomOutcome,
    pub atom3: AtomOutcome,
    /// Readout of the auxiliary atoms `s` (cavity A) and `t` (cavity B).
    pub aux: [InternalLevel; 2],
    pub detector: Detector,
}

impl Default for DetectionPlan {
    fn default() -> Self {
        Self {
            atom2: AtomOutcome::new(InternalLevel::G, Momentum::P0),
            atom3: AtomOutcome::new(InternalLevel::G, Momentum::Pm2),
            aux: [InternalLevel::G; 2],
            detector: Detector::D1,
        }
    }
}

impl DetectionPlan {
    /// All 16 atom-2/atom-3 outcomes for one auxiliary readout, in
    /// lexicographic `(int2, int3, mom2, mom3)` order.
    pub fn atom_outcomes(aux: [InternalLevel; 2]) -> Vec<Self> {
        let levels = [InternalLevel::G, InternalLevel::E];
        let moms = [Momentum::P0, Momentum::Pm2];
        let mut plans = Vec::with_capacity(16);
        for i2 in levels {
            for i3 in levels {
                for m2 in moms {
                    for m3 in moms {
                        plans.push(Self {
                            atom2: AtomOutcome::new(i2, m2),
                            atom3: AtomOutcome::new(i3, m3),
                            aux,
                            detector: Detector::D1,
                        });
                    }
                }
            }
        }
        plans
    }

    /// `int2,int3,mom2,mom3`.
    pub fn label(&self) -> String {
        format!(
            "{},{},{},{}",
            self.atom2.internal, self.atom3.internal, self.atom2.momentum, self.atom3.momentum
        )
    }

    pub fn mixed_momentum(&self) -> bool {
        self.atom2.momentum != self.atom3.momentum
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SwapOutcomeRow {
    pub plan: DetectionPlan,
    pub label: String,
    /// Probability given the auxiliary readout.
    pub probability: f64,
    /// Entropy of atom 1 against atom 4, in bits.
    pub entropy: Option<f64>,
    #[serde(skip)]
    pub state: Option<KetState>,
}

const A: &str = "cA";
const B: &str = "cB";
const AUX: [&str; 2] = ["s", "t"];
const DETECTED: [&str; 4] = ["a2.int", "a3.int", "a2.mom", "a3.mom"];
/// Label of the step after which both pairs exist.
pub const PAIRS_STEP: &str = "pairs";

/// Everything up to, but excluding, the atom-2/atom-3 detection.
fn swap_prefix(params: &PhysicalParams, aux: [InternalLevel; 2]) -> Result<Tracer> {
    let conventions = PairConventions::default();
    let mut pairs: Option<KetState> = None;
    for layout in [
        PairLayout::new("a1", "a2", "c12", "x12"),
        PairLayout::new("a3", "a4", "c34", "x34"),
    ] {
        let pair = generate_hyper_bell_pair_with(params, &conventions, InternalLevel::E, &layout)?
            .final_state
            .ok_or_else(|| ProtocolError::InvalidArgument("pair generation failed".into()))?
            .normalized()?;
        pairs = Some(match pairs {
            None => pair,
            Some(p) => p.tensor(&pair)?,
        });
    }
    let pairs = pairs.expect("two pairs");
    let mut t = Tracer::start("swap", PAIRS_STEP, pairs);

    t.inject("inject cA cB", &cavity_plus(A)?.tensor(&cavity_plus(B)?)?)?;
    let duration = params.bragg_time();
    for atom in ["a2", "a3"] {
        let ids = AtomIds::of(atom);
        for (cav, route) in [(A, InternalLevel::G), (B, InternalLevel::E)] {
            let targets = [ids.internal.as_str(), ids.momentum.as_str(), cav];
            t.apply(&format!("bragg {atom} {cav}"), StepKind::Bragg, &targets, |s| {
                bragg_closed_form_routed(s, &ids, cav, params, duration, Some(route))
            })?;
        }
    }

    let readers = internal_ket(AUX[0], InternalLevel::G)?.tensor(&internal_ket(AUX[1], InternalLevel::G)?)?;
    t.inject("inject s t", &readers)?;
    for (aux_id, cav) in AUX.iter().zip([A, B]) {
        t.apply(&format!("exchange {aux_id} {cav}"), StepKind::Exchange, &[aux_id, cav], |s| {
            jc_resonant(s, aux_id, cav, params, params.jc_transfer_time())
        })?;
    }
    for aux_id in AUX {
        t.apply(&format!("ramsey {aux_id}"), StepKind::Ramsey, &[aux_id], |s| {
            ramsey_zone(s, aux_id)
        })?;
    }
    if !t.measure("detect s t", &AUX, &[aux[0].label(), aux[1].label()])? {
        return Ok(t);
    }
    t.drop("drop cavities", &[A, B, AUX[0], AUX[1]])?;
    for atom in ["a2", "a3"] {
        let int = format!("{atom}.int");
        t.apply(&format!("ramsey {atom}"), StepKind::Ramsey, &[&int], |s| ramsey_zone(s, &int))?;
    }
    Ok(t)
}

fn detect_atoms(t: &mut Tracer, plan: &DetectionPlan) -> Result<()> {
    if t.is_impossible() {
        return Ok(());
    }
    let chosen = [
        plan.atom2.internal.label(),
        plan.atom3.internal.label(),
        plan.atom2.momentum.label(),
        plan.atom3.momentum.label(),
    ];
    if t.measure("detect a2 a3", &DETECTED, &chosen)? {
        t.drop("drop a2 a3", &DETECTED)?;
    }
    Ok(())
}

/// Swap hyperentanglement from pairs (1,2), (3,4) onto atoms 1 and 4.
///
/// Atoms 2 and 3 pass through cavities A (ground arm) and B (excited arm);
/// auxiliary atoms read the cavities out, then atoms 2 and 3 are detected.
/// The final state is the conditional state of atoms 1 and 4.
pub fn swap_entanglement(params: &PhysicalParams, plan: &DetectionPlan) -> Result<PipelineTrace> {
    let mut t = swap_prefix(params, plan.aux)?;
    detect_atoms(&mut t, plan)?;
    Ok(t.finish())
}

/// All 16 atom-2/atom-3 outcomes given the auxiliary readout `(g, g)`.
pub fn enumerate_swap_outcomes(params: &PhysicalParams) -> Result<Vec<SwapOutcomeRow>> {
    enumerate_swap_outcomes_for(params, [InternalLevel::G; 2])
}

/// As [`enumerate_swap_outcomes`] for any auxiliary readout.
pub fn enumerate_swap_outcomes_for(
    params: &PhysicalParams,
    aux: [InternalLevel; 2],
) -> Result<Vec<SwapOutcomeRow>> {
    let prefix = swap_prefix(params, aux)?;
    if prefix.is_impossible() {
        return Err(ProtocolError::InvalidArgument(format!(
            "auxiliary outcome ({}, {}) has zero probability",
            aux[0], aux[1]
        )));
    }
    DetectionPlan::atom_outcomes(aux)
        .into_par_iter()
        .map(|plan| {
            let mut t = prefix.clone();
            detect_atoms(&mut t, &plan)?;
            let probability = t.last_probability().unwrap_or(0.0);
            let state = t.finish().final_state;
            let entropy = state
                .as_ref()
                .map(|s| entanglement_entropy(&s.normalized()?, &["a1.int", "a1.mom"]))
                .transpose()?;
            Ok(SwapOutcomeRow {
                label: plan.label(),
                plan,
                probability,
                entropy,
                state,
            })
        })
        .collect()
}
