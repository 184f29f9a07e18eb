use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{BasisConfig, KetState, StateError, SubsystemSpec};

fn clean(x: f64) -> f64 {
    // collapses -0.0 so output does not depend on the sign of zero
    x + 0.0
}

impl KetState {
    /// `{registry: [...], amplitudes: [{config, re, im}]}` with amplitudes
    /// sorted by label strings and config keys in registry order.
    pub fn to_json_value(&self) -> Value {
        let registry: Vec<Value> = self
            .registry()
            .iter()
            .map(|s| serde_json::to_value(s).expect("spec serializes"))
            .collect();
        let amplitudes: Vec<Value> = self
            .sorted_entries()
            .into_iter()
            .map(|(labels, a)| {
                let mut cfg = Map::new();
                for (spec, label) in self.registry().iter().zip(labels) {
                    cfg.insert(spec.id().to_string(), Value::String(label.to_string()));
                }
                json!({"config": cfg, "re": clean(a.re), "im": clean(a.im)})
            })
            .collect();
        json!({"registry": registry, "amplitudes": amplitudes})
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("json value serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let v: Value = serde_json::from_str(text).map_err(|e| StateError::Parse(e.to_string()))?;
        Self::from_json_value(&v, None)
    }

    /// Parse a serialized state. When the value carries no `registry`,
    /// `fallback` supplies it (state literals in scripts omit it).
    pub fn from_json_value(v: &Value, fallback: Option<&[SubsystemSpec]>) -> Result<Self, StateError> {
        let registry: Vec<SubsystemSpec> = match v.get("registry") {
            Some(r) => {
                let raw: Vec<SubsystemSpec> =
                    serde_json::from_value(r.clone()).map_err(|e| StateError::Parse(e.to_string()))?;
                // re-validate through the constructor
                raw.into_iter()
                    .map(|s| SubsystemSpec::new(s.id(), s.kind(), s.basis().to_vec()))
                    .collect::<Result<_, _>>()?
            }
            None => fallback
                .ok_or_else(|| StateError::Parse("state has no registry".into()))?
                .to_vec(),
        };
        let terms = parse_terms(v)?;
        KetState::new(registry, terms, false)
    }
}

pub(crate) fn parse_terms(v: &Value) -> Result<Vec<(BasisConfig, Complex64)>, StateError> {
    let amps = v
        .get("amplitudes")
        .and_then(Value::as_array)
        .ok_or_else(|| StateError::Parse("missing amplitudes array".into()))?;
    let mut terms = Vec::with_capacity(amps.len());
    for entry in amps {
        let cfg = entry
            .get("config")
            .and_then(Value::as_object)
            .ok_or_else(|| StateError::Parse("amplitude without config object".into()))?;
        let mut bc = BasisConfig::new();
        for (id, label) in cfg {
            let label = label
                .as_str()
                .ok_or_else(|| StateError::Parse(format!("label for {id} is not a string")))?;
            bc = bc.with(id.clone(), label);
        }
        let re = entry.get("re").and_then(Value::as_f64).unwrap_or(0.0);
        let im = entry.get("im").and_then(Value::as_f64).unwrap_or(0.0);
        terms.push((bc, Complex64::new(re, im)));
    }
    Ok(terms)
}
