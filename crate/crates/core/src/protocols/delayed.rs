use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    beam_splitter, bragg_closed_form, classical_pulse, detect_photons, postselect_photon_number,
    AtomIds, InternalLevel, PulseSpec,
};
use crate::params::PhysicalParams;
use crate::statekit::{KetState, Projection};

use super::trace::{StepKind, TraceStep, Tracer};
use super::{atom_ket, cavity_plus, PipelineTrace, ProtocolError, Result};

/// Largest atom count accepted by the n-partite pipelines.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Detector {
    #[default]
    D1,
    D2,
}

impl Detector {
    pub fn label(self) -> &'static str {
        match self {
            Detector::D1 => "D1",
            Detector::D2 => "D2",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "D1" => Ok(Detector::D1),
            "D2" => Ok(Detector::D2),
            other => Err(format!("expected D1 or D2, got {other:?}")),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 || n > MAX_ATOMS {
        return Err(ProtocolError::InvalidArgument(format!(
            "atom count must be even and within 4..={MAX_ATOMS}, got {n}"
        )));
    }
    Ok(())
}

/// Atoms `a{first}..` Bragg-diffracted one after another through `cavity`.
fn group_trace(params: &PhysicalParams, first: usize, count: usize, cavity: &str) -> Result<PipelineTrace> {
    let mut state = cavity_plus(cavity)?;
    for i in first..first + count {
        state = state.tensor(&atom_ket(&format!("a{i}"), InternalLevel::G, "P0")?)?;
    }
    let mut t = Tracer::start("group", &format!("prepare {cavity}"), state);
    let duration = params.bragg_time();
    for i in first..first + count {
        let ids = AtomIds::of(&format!("a{i}"));
        let targets = [ids.internal.as_str(), ids.momentum.as_str(), cavity];
        t.apply(&format!("bragg a{i} {cavity}"), StepKind::Bragg, &targets, |s| {
            bragg_closed_form(s, &ids, cavity, params, duration)
        })?;
    }
    Ok(t.finish())
}

fn groups(params: &PhysicalParams, n: usize) -> Result<(PipelineTrace, PipelineTrace)> {
    check_n(n)?;
    let half = n / 2;
    Ok((
        group_trace(params, 1, half, "c1")?,
        group_trace(params, half + 1, half, "c2")?,
    ))
}

/// Two cavity-correlated momentum GHZ groups of `n/2` atoms each, tied to
/// cavities `c1` and `c2`.
pub fn npartite_generate(params: &PhysicalParams, n: usize) -> Result<(KetState, KetState)> {
    let (g1, g2) = groups(params, n)?;
    let take = |t: PipelineTrace| t.final_state.expect("deterministic pipeline");
    Ok((take(g1), take(g2)))
}

fn swap_groups(params: &PhysicalParams, n: usize, detector: Detector) -> Result<Tracer> {
    let (g1, g2) = groups(params, n)?;
    let mut history: Vec<TraceStep> = Vec::new();
    for (tag, trace) in [("group 1", &g1), ("group 2", &g2)] {
        history.extend(trace.steps.iter().cloned().map(|mut s| {
            s.label = format!("{tag}: {}", s.label);
            s
        }));
    }
    let joint = g1
        .final_state
        .expect("deterministic pipeline")
        .tensor(&g2.final_state.expect("deterministic pipeline"))?;
    let mut t = Tracer::start_with_history("delayed", history, "tensor", joint);

    let (dist, projection) = postselect_photon_number(t.state(), &["c1", "c2"], 1)?;
    let outcomes = dist.into_iter().map(|(n, p)| (format!("c1+c2={n}"), p)).collect();
    if !t.select("postselect c1 c2", StepKind::Postselect, &["c1", "c2"], outcomes, projection)? {
        return Ok(t);
    }
    t.apply("splitter", StepKind::BeamSplitter, &["c2", "c1", "D1", "D2"], |s| {
        beam_splitter(s, "c2", "c1", "D1", "D2")
    })?;

    let detected = detect_photons(t.state(), &["D1", "D2"])?;
    let outcomes = detected.iter().map(|o| (o.label(), o.probability)).collect();
    let want = match detector {
        Detector::D1 => [1, 0],
        Detector::D2 => [0, 1],
    };
    let projection = detected
        .into_iter()
        .find(|o| o.counts.iter().map(|(_, c)| *c).eq(want))
        .and_then(|o| {
            let probability = o.probability;
            o.state
                .filter(|_| probability > 0.0)
                .map(|state| Projection::Outcome { probability, state })
        })
        .unwrap_or(Projection::Impossible);
    t.select("detect D1 D2", StepKind::Measure, &["D1", "D2"], outcomes, projection)?;
    Ok(t)
}

/// Photonic swapping of two cavity-entangled atom pairs.
///
/// The cavities are post-selected on a single photon in total, mixed on a
/// beam splitter and the photon is detected at `detector`.
pub fn delayed_choice_swap(params: &PhysicalParams, detector: Detector) -> Result<PipelineTrace> {
    Ok(swap_groups(params, 4, detector)?.finish())
}

/// n-atom version of [`delayed_choice_swap`]; returns the conditional state.
pub fn npartite_swap(params: &PhysicalParams, n: usize, detector: Detector) -> Result<KetState> {
    swap_groups(params, n, detector)?
        .finish()
        .final_state
        .ok_or_else(|| ProtocolError::InvalidArgument(format!("{detector} outcome is impossible")))
}

/// π pulses (`g → ie`, `e → ig`) on the named momentum arm of each atom.
pub fn delayed_choice_hyper<A, M>(state: &KetState, arms: &[(A, M)]) -> Result<KetState>
where
    A: AsRef<str>,
    M: AsRef<str>,
{
    let mut out = state.clone();
    for (atom, arm) in arms {
        let pulse = PulseSpec::pi_imaginary_flip(arm.as_ref());
        out = classical_pulse(&out, &AtomIds::of(atom.as_ref()), &pulse)?;
    }
    Ok(out)
}

/// `P0` arms of the first half of the atoms, `P-2` arms of the second.
pub fn npartite_arms(n: usize) -> Vec<(String, &'static str)> {
    (1..=n)
        .map(|i| (format!("a{i}"), if i <= n / 2 { "P0" } else { "P-2" }))
        .collect()
}
