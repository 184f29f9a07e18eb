use std::collections::BTreeMap;

use serde::Serialize;

use super::{ProtocolError, Result};
use crate::dynamics::DynamicsError;
use crate::statekit::{BasisConfig, KetState, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Prepare,
    Bragg,
    Pulse,
    Exchange,
    Ramsey,
    MomentumSplitter,
    BeamSplitter,
    Postselect,
    Measure,
    Drop,
}

impl StepKind {
    /// Steps that evolve the state unitarily.
    pub fn is_dynamics(self) -> bool {
        matches!(
            self,
            StepKind::Bragg
                | StepKind::Pulse
                | StepKind::Exchange
                | StepKind::Ramsey
                | StepKind::MomentumSplitter
                | StepKind::BeamSplitter
        )
    }
}

#[derive(Debug, Clone)]
pub struct TraceStep {
    pub label: String,
    pub kind: StepKind,
    /// Subsystem ids the step acts on.
    pub targets: Vec<String>,
    pub state: KetState,
    /// Probability of the selected outcome, for selective steps.
    pub probability: Option<f64>,
    /// Full outcome distribution of a selective step, as `(label, p)`.
    pub outcomes: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub pipeline: String,
    pub steps: Vec<TraceStep>,
    /// `None` when a selected outcome had zero probability.
    pub final_state: Option<KetState>,
    /// Joint probability of every selected outcome.
    pub probability: f64,
}

impl PipelineTrace {
    pub fn step(&self, label: &str) -> Option<&TraceStep> {
        self.steps.iter().find(|s| s.label == label)
    }

    pub fn snapshot(&self, label: &str) -> Option<&KetState> {
        self.step(label).map(|s| &s.state)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn is_impossible(&self) -> bool {
        self.final_state.is_none()
    }

    /// Ids targeted by dynamics steps after the step `label`.
    pub fn dynamics_targets_after(&self, label: &str) -> Option<Vec<&str>> {
        let start = self.steps.iter().position(|s| s.label == label)?;
        let mut ids: Vec<&str> = self.steps[start + 1..]
            .iter()
            .filter(|s| s.kind.is_dynamics())
            .flat_map(|s| s.targets.iter().map(String::as_str))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        Some(ids)
    }
}

/// Incremental trace builder used by the pipelines.
#[derive(Clone)]
pub(crate) struct Tracer {
    pipeline: String,
    steps: Vec<TraceStep>,
    state: KetState,
    probability: f64,
    impossible: bool,
}

impl Tracer {
    pub(crate) fn start(pipeline: &str, label: &str, state: KetState) -> Self {
        let targets = state.ids().into_iter().map(String::from).collect();
        let mut t = Self {
            pipeline: pipeline.to_string(),
            steps: Vec::new(),
            state: state.clone(),
            probability: 1.0,
            impossible: false,
        };
        t.steps.push(TraceStep {
            label: label.to_string(),
            kind: StepKind::Prepare,
            targets,
            state,
            probability: None,
            outcomes: Vec::new(),
        });
        t
    }

    /// Start after previously recorded steps, e.g. of sub-pipelines.
    pub(crate) fn start_with_history(
        pipeline: &str,
        history: Vec<TraceStep>,
        label: &str,
        state: KetState,
    ) -> Self {
        let mut t = Self::start(pipeline, label, state);
        let own = t.steps.pop().expect("start records one step");
        t.steps = history;
        t.steps.push(own);
        t
    }

    pub(crate) fn state(&self) -> &KetState {
        &self.state
    }

    pub(crate) fn is_impossible(&self) -> bool {
        self.impossible
    }

    /// Product of all selection probabilities so far.
    pub(crate) fn probability(&self) -> f64 {
        self.probability
    }

    pub(crate) fn last_probability(&self) -> Option<f64> {
        self.steps.iter().rev().find_map(|s| s.probability)
    }

    fn push(
        &mut self,
        label: &str,
        kind: StepKind,
        targets: &[&str],
        state: KetState,
        probability: Option<f64>,
        outcomes: Vec<(String, f64)>,
    ) -> Result<()> {
        if self.steps.iter().any(|s| s.label == label) {
            return Err(ProtocolError::DuplicateLabel(label.to_string()));
        }
        self.state = state.clone();
        self.steps.push(TraceStep {
            label: label.to_string(),
            kind,
            targets: targets.iter().map(|s| s.to_string()).collect(),
            state,
            probability,
            outcomes,
        });
        Ok(())
    }

    /// Apply a deterministic primitive and snapshot the result.
    pub(crate) fn apply<F>(&mut self, label: &str, kind: StepKind, targets: &[&str], f: F) -> Result<()>
    where
        F: FnOnce(&KetState) -> std::result::Result<KetState, DynamicsError>,
    {
        let next = f(&self.state)?;
        self.push(label, kind, targets, next, None, Vec::new())
    }

    /// Tensor a fresh factor onto the current state.
    pub(crate) fn inject(&mut self, label: &str, factor: &KetState) -> Result<()> {
        let next = self.state.tensor(factor)?;
        let ids: Vec<String> = factor.ids().into_iter().map(String::from).collect();
        let targets: Vec<&str> = ids.iter().map(String::as_str).collect();
        self.push(label, StepKind::Prepare, &targets, next, None, Vec::new())
    }

    /// Remove subsystems that are in a product state with the rest.
    pub(crate) fn drop(&mut self, label: &str, ids: &[&str]) -> Result<()> {
        let mut next = self.state.clone();
        for id in ids {
            next = next.drop_product_subsystem(id)?;
        }
        self.push(label, StepKind::Drop, ids, next, None, Vec::new())
    }

    /// Record a selective step. Returns `false` when the chosen outcome is
    /// impossible; the tracer then stops accepting work.
    pub(crate) fn select(
        &mut self,
        label: &str,
        kind: StepKind,
        targets: &[&str],
        outcomes: Vec<(String, f64)>,
        chosen: Projection,
    ) -> Result<bool> {
        match chosen {
            Projection::Outcome { probability, state } => {
                self.probability *= probability;
                self.push(label, kind, targets, state, Some(probability), outcomes)?;
                Ok(true)
            }
            Projection::Impossible => {
                self.probability = 0.0;
                self.impossible = true;
                let state = self.state.clone();
                self.push(label, kind, targets, state, Some(0.0), outcomes)?;
                Ok(false)
            }
        }
    }

    /// Projective measurement of `ids` in their own bases, selecting `chosen`.
    pub(crate) fn measure(&mut self, label: &str, ids: &[&str], chosen: &[&str]) -> Result<bool> {
        let outcomes = marginal(&self.state, ids)?;
        let assignment = BasisConfig::from_pairs(ids.iter().copied().zip(chosen.iter().copied()));
        let projection = self.state.project_and_collapse(&assignment)?;
        self.select(label, StepKind::Measure, ids, outcomes, projection)
    }

    pub(crate) fn finish(self) -> PipelineTrace {
        PipelineTrace {
            pipeline: self.pipeline,
            steps: self.steps,
            final_state: (!self.impossible).then_some(self.state),
            probability: self.probability,
        }
    }
}

/// Outcome distribution over the joint basis of `ids`, labelled `id=label,…`.
pub(crate) fn marginal(state: &KetState, ids: &[&str]) -> Result<Vec<(String, f64)>> {
    let positions = ids
        .iter()
        .map(|id| state.position(id))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let total = state.norm_sqr();
    let mut dist: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (cfg, amp) in state.iter() {
        let key = positions.iter().map(|&p| cfg.index_at(p)).collect();
        *dist.entry(key).or_default() += amp.norm_sqr() / total;
    }
    Ok(dist
        .into_iter()
        .map(|(key, p)| {
            let label = ids
                .iter()
                .zip(&positions)
                .zip(&key)
                .map(|((id, &pos), &i)| format!("{id}={}", state.registry()[pos].label(i)))
                .collect::<Vec<_>>()
                .join(",");
            (label, p)
        })
        .collect())
}
