use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::params::PhysicalParams;

use super::{PipelineTrace, StepKind};

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeProbability {
    pub outcome: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepReport {
    pub label: String,
    pub kind: StepKind,
    pub targets: Vec<String>,
    pub probability: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<OutcomeProbability>,
    /// Inline state, global phase fixed by the first amplitude.
    pub state: Value,
}

/// Serializable summary of a pipeline run.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub pipeline: String,
    pub params: PhysicalParams,
    pub steps: Vec<StepReport>,
    pub outcome_table: Vec<Value>,
    pub metrics: BTreeMap<String, f64>,
    pub probability: f64,
    pub final_state: Option<Value>,
}

impl PipelineReport {
    pub fn from_trace(trace: &PipelineTrace, params: &PhysicalParams) -> Self {
        let steps = trace
            .steps
            .iter()
            .map(|s| StepReport {
                label: s.label.clone(),
                kind: s.kind,
                targets: s.targets.clone(),
                probability: s.probability,
                outcomes: s
                    .outcomes
                    .iter()
                    .map(|(o, p)| OutcomeProbability {
                        outcome: o.clone(),
                        probability: *p,
                    })
                    .collect(),
                state: s.state.canonical_phase().to_json_value(),
            })
            .collect();
        Self {
            pipeline: trace.pipeline.clone(),
            params: *params,
            steps,
            outcome_table: Vec::new(),
            metrics: BTreeMap::new(),
            probability: trace.probability,
            final_state: trace
                .final_state
                .as_ref()
                .map(|s| s.canonical_phase().to_json_value()),
        }
    }

    pub fn with_metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    pub fn with_outcome_table(mut self, rows: Vec<Value>) -> Self {
        self.outcome_table = rows;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
