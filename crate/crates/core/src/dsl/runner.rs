use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::ast::*;
use super::RunError;
use crate::dynamics::{
    adiabatic_point, beam_splitter, bragg_closed_form_routed, classical_pulse, detect_photons,
    jc_resonant, momentum_hadamard, postselect_photon_number, ramsey_zone, AdiabaticPoint, AtomIds,
    Branch, InternalLevel, OracleOptions, PulseSpec,
};
use crate::metrics::{entanglement_entropy, fidelity};
use crate::params::{
    apply_overrides, load_preset_file, resolve_preset, validate_bragg_regime, FrequencyReading,
    ParamPreset, PhysicalParams, RegimeDiagnostics,
};
use crate::protocols::{atom_ket, cavity_plus, internal_ket, PipelineReport, StepKind, StepReport};
use crate::protocols::{ProtocolError, Tracer};
use crate::statekit::{BasisConfig, KetState, Projection, SubsystemSpec};

const DEFAULT_PRESET: &str = "rb85";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Preset name or parameter file used instead of every `params` source.
    pub params: Option<String>,
    /// Directory searched for `<name>.params` before the built-in presets.
    pub preset_dir: Option<PathBuf>,
    /// Base for relative `@file` literals and parameter files.
    pub base_dir: Option<PathBuf>,
    /// Keep a state snapshot per step.
    pub trace: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub line: usize,
    pub step: String,
    pub outcome: String,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeRow {
    pub outcome: String,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    /// Conditional state with the measured subsystems removed.
    pub state: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeTable {
    pub line: usize,
    pub step: String,
    pub rows: Vec<OutcomeRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub line: usize,
    pub branch: InternalLevel,
    #[serde(flatten)]
    pub point: AdiabaticPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpectResult {
    pub line: usize,
    pub statement: String,
    /// `None` when nothing could be measured, e.g. after an impossible selection.
    pub measured: Option<f64>,
    pub passed: bool,
}

/// Everything a run produced. `wall_time` is not serialized, so reports of
/// repeated runs are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub script_hash: String,
    pub preset: String,
    pub params: PhysicalParams,
    pub regime: RegimeDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepReport>>,
    pub selections: Vec<Selection>,
    pub outcome_tables: Vec<OutcomeTable>,
    pub oracle: Vec<OracleRecord>,
    pub expects: Vec<ExpectResult>,
    pub probability: f64,
    pub final_state: Option<Value>,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

impl RunReport {
    pub fn expects_failed(&self) -> usize {
        self.expects.iter().filter(|e| !e.passed).count()
    }

    pub fn passed(&self) -> bool {
        self.expects_failed() == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Hex SHA-256 of the canonical script text.
pub fn script_hash(script: &Script) -> String {
    hex::encode(Sha256::digest(script.to_string().as_bytes()))
}

struct Runner<'o> {
    opts: &'o RunOptions,
    preset: ParamPreset,
    params: PhysicalParams,
    tracer: Option<Tracer>,
    selections: Vec<Selection>,
    tables: Vec<OutcomeTable>,
    oracle: Vec<OracleRecord>,
    expects: Vec<ExpectResult>,
}

fn err(line: usize, step: &Step, message: impl ToString) -> RunError {
    RunError { line: Some(line), statement: step.to_string(), message: message.to_string() }
}

fn atom_ids(names: &[String]) -> Vec<String> {
    names
        .iter()
        .flat_map(|a| {
            let ids = AtomIds::of(a);
            [ids.internal, ids.momentum]
        })
        .collect()
}

fn resolve_path(opts: &RunOptions, p: &str) -> PathBuf {
    match &opts.base_dir {
        Some(base) if Path::new(p).is_relative() => base.join(p),
        _ => PathBuf::from(p),
    }
}

/// `--params` wins over the script; names with `/` or `.` are files.
fn resolve_params(opts: &RunOptions, source: &str) -> Result<ParamPreset, String> {
    let source = opts.params.as_deref().unwrap_or(source);
    let r = if source.contains('/') || source.contains('.') {
        load_preset_file(&resolve_path(opts, source))
    } else {
        resolve_preset(source, opts.preset_dir.as_deref())
    };
    r.map_err(|e| e.to_string())
}

impl<'o> Runner<'o> {
    fn tracer(&mut self) -> Result<&mut Tracer, String> {
        self.tracer.as_mut().ok_or_else(|| "no subsystems have been declared".to_string())
    }

    fn state(&self) -> Option<&KetState> {
        self.tracer.as_ref().filter(|t| !t.is_impossible()).map(Tracer::state)
    }

    fn add(&mut self, label: &str, factor: KetState) -> Result<(), ProtocolError> {
        match &mut self.tracer {
            None => {
                self.tracer = Some(Tracer::start("script", label, factor));
                Ok(())
            }
            Some(t) => t.inject(label, &factor),
        }
    }

    fn exec(&mut self, line: usize, step: &Step) -> Result<(), String> {
        let label = format!("{line}: {step}");
        if let Step::Params { source, overrides } = step {
            self.preset = resolve_params(self.opts, source)?;
            self.params = apply_overrides(&self.preset.params, overrides).map_err(|e| e.to_string())?;
            return Ok(());
        }
        if let Step::Expect(e) = step {
            let (measured, passed) = self.expect(e)?;
            self.expects.push(ExpectResult { line, statement: step.to_string(), measured, passed });
            return Ok(());
        }
        if let Step::Oracle { branch, beta_t, lmax, tol } = step {
            let opts = OracleOptions { l_max: *lmax, tol: *tol, ..OracleOptions::default() };
            let b = match branch {
                InternalLevel::G => Branch::GroundInitial,
                InternalLevel::E => Branch::ExcitedInitial,
            };
            let point = adiabatic_point(&self.params, beta_t.value, b, opts).map_err(|e| e.to_string())?;
            self.oracle.push(OracleRecord { line, branch: *branch, point });
            return Ok(());
        }
        if self.tracer.as_ref().is_some_and(Tracer::is_impossible) {
            return Ok(());
        }
        let params = self.params;
        let bragg_time = params.bragg_time();
        let jc_time = params.jc_transfer_time();
        let pe = |e: ProtocolError| e.to_string();
        match step {
            Step::Cavity { id, initial, nmax } => {
                let ket = cavity_ket(id, *initial, nmax.unwrap_or(1)).map_err(pe)?;
                self.add(&label, ket).map_err(pe)?;
            }
            Step::Atom { name, internal, momentum } => {
                let ket = atom_ket(name, *internal, momentum).map_err(pe)?;
                self.add(&label, ket).map_err(pe)?;
            }
            Step::Bragg { atom, cavity, duration, route } => {
                let ids = AtomIds::of(atom);
                let t = seconds(duration, bragg_time);
                let targets = [ids.internal.as_str(), ids.momentum.as_str(), cavity.as_str()];
                self.tracer()?
                    .apply(&label, StepKind::Bragg, &targets, |s| {
                        bragg_closed_form_routed(s, &ids, cavity, &params, t, *route)
                    })
                    .map_err(pe)?;
            }
            Step::Pulse { atom, arm, theta, phi, convention } => {
                let ids = AtomIds::of(atom);
                let pulse = PulseSpec::new(theta.value, phi.value, arm.as_deref(), *convention);
                let targets = [ids.internal.as_str(), ids.momentum.as_str()];
                self.tracer()?
                    .apply(&label, StepKind::Pulse, &targets, |s| classical_pulse(s, &ids, &pulse))
                    .map_err(pe)?;
            }
            Step::Ramsey { atom } => {
                let int = AtomIds::of(atom).internal;
                self.tracer()?
                    .apply(&label, StepKind::Ramsey, &[&int], |s| ramsey_zone(s, &int))
                    .map_err(pe)?;
            }
            Step::HadamardMomentum { atom } => {
                let mom = AtomIds::of(atom).momentum;
                self.tracer()?
                    .apply(&label, StepKind::MomentumSplitter, &[&mom], |s| momentum_hadamard(s, &mom))
                    .map_err(pe)?;
            }
            Step::Aux { id, cavity, duration, outcome } => {
                let t = seconds(duration, jc_time);
                let (aux, cav) = (id.as_str(), cavity.as_str());
                let ket = internal_ket(aux, InternalLevel::G).map_err(pe)?;
                let tracer = self.tracer()?;
                tracer.inject(&format!("{line}: inject {aux}"), &ket).map_err(pe)?;
                tracer
                    .apply(&format!("{line}: exchange {aux} {cav}"), StepKind::Exchange, &[aux, cav], |s| {
                        jc_resonant(s, aux, cav, &params, t)
                    })
                    .map_err(pe)?;
                tracer
                    .apply(&format!("{line}: ramsey {aux}"), StepKind::Ramsey, &[aux], |s| ramsey_zone(s, aux))
                    .map_err(pe)?;
                let ok = tracer.measure(&format!("{line}: detect {aux}"), &[aux], &[outcome.label()]).map_err(pe)?;
                let p = tracer.last_probability().unwrap_or(0.0);
                if ok {
                    tracer.drop(&format!("{line}: drop {aux} {cav}"), &[aux, cav]).map_err(pe)?;
                }
                self.selections.push(Selection {
                    line,
                    step: step.to_string(),
                    outcome: format!("{aux}={outcome}"),
                    probability: p,
                    entropy: None,
                });
            }
            Step::Splitter { in0, in1, out2, out3 } => {
                let targets = [in0.as_str(), in1.as_str(), out2.as_str(), out3.as_str()];
                self.tracer()?
                    .apply(&label, StepKind::BeamSplitter, &targets, |s| beam_splitter(s, in0, in1, out2, out3))
                    .map_err(pe)?;
            }
            Step::Postselect { modes, total } => {
                let refs: Vec<&str> = modes.iter().map(String::as_str).collect();
                let tracer = self.tracer()?;
                let (dist, projection) =
                    postselect_photon_number(tracer.state(), &refs, *total).map_err(|e| e.to_string())?;
                let outcome = format!("{}={total}", modes.join("+"));
                let outcomes = dist
                    .into_iter()
                    .map(|(n, p)| (format!("{}={n}", modes.join("+")), p))
                    .collect();
                let p = projection.probability();
                tracer.select(&label, StepKind::Postselect, &refs, outcomes, projection).map_err(pe)?;
                self.selections.push(Selection { line, step: step.to_string(), outcome, probability: p, entropy: None });
            }
            Step::Detect { modes, choice } => {
                let refs: Vec<&str> = modes.iter().map(String::as_str).collect();
                let tracer = self.tracer()?;
                let detected = detect_photons(tracer.state(), &refs).map_err(|e| e.to_string())?;
                match choice {
                    Choice::Enumerate => {
                        let rows = detected
                            .iter()
                            .map(|o| OutcomeRow {
                                outcome: o.label(),
                                probability: o.probability,
                                entropy: None,
                                state: o.state.as_ref().map(|s| s.canonical_phase().to_json_value()),
                            })
                            .collect();
                        self.tables.push(OutcomeTable { line, step: step.to_string(), rows });
                    }
                    Choice::Select(counts) => {
                        let outcomes = detected.iter().map(|o| (o.label(), o.probability)).collect();
                        let outcome = modes
                            .iter()
                            .zip(counts)
                            .map(|(m, c)| format!("{m}={c}"))
                            .collect::<Vec<_>>()
                            .join(",");
                        let projection = detected
                            .into_iter()
                            .find(|o| o.counts.iter().map(|(_, c)| c).eq(counts.iter()))
                            .and_then(|o| {
                                let probability = o.probability;
                                o.state
                                    .filter(|_| probability > 0.0)
                                    .map(|state| Projection::Outcome { probability, state })
                            })
                            .unwrap_or(Projection::Impossible);
                        let p = projection.probability();
                        tracer.select(&label, StepKind::Measure, &refs, outcomes, projection).map_err(pe)?;
                        self.selections.push(Selection {
                            line,
                            step: step.to_string(),
                            outcome,
                            probability: p,
                            entropy: None,
                        });
                    }
                }
            }
            Step::Measure { atoms, parts, choice, entropy } => {
                let ids = measured_ids(atoms, *parts);
                let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
                let part = entropy.as_ref().map(|p| self.expand(p));
                let tracer = self.tracer()?;
                match choice {
                    Choice::Enumerate => {
                        let rows = enumerate_outcomes(tracer.state(), &refs, part.as_deref())?;
                        self.tables.push(OutcomeTable { line, step: step.to_string(), rows });
                    }
                    Choice::Select(labels) => {
                        let chosen: Vec<&str> = labels.iter().map(String::as_str).collect();
                        let ok = tracer.measure(&label, &refs, &chosen).map_err(pe)?;
                        let p = tracer.last_probability().unwrap_or(0.0);
                        let entropy = match (&part, ok) {
                            (Some(part), true) => Some(entropy_of(tracer.state(), part)?),
                            _ => None,
                        };
                        self.selections.push(Selection {
                            line,
                            step: step.to_string(),
                            outcome: labels.join(","),
                            probability: p,
                            entropy,
                        });
                    }
                }
            }
            Step::Drop { ids } => {
                let ids = self.expand(ids);
                let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
                self.tracer()?.drop(&label, &refs).map_err(pe)?;
            }
            Step::Params { .. } | Step::Oracle { .. } | Step::Expect(_) => unreachable!("handled above"),
        }
        Ok(())
    }

    /// Atom names become their two subsystem ids; other ids stay.
    fn expand(&self, ids: &[String]) -> Vec<String> {
        let state = self.tracer.as_ref().map(Tracer::state);
        ids.iter()
            .flat_map(|id| {
                let is_mode = state.is_some_and(|s| s.has_subsystem(id));
                if is_mode {
                    vec![id.clone()]
                } else {
                    atom_ids(std::slice::from_ref(id))
                }
            })
            .collect()
    }

    fn expect(&self, e: &Expectation) -> Result<(Option<f64>, bool), String> {
        let probability = self.tracer.as_ref().map_or(1.0, Tracer::probability);
        match e {
            Expectation::Probability { value, tol } => {
                Ok((Some(probability), (probability - value).abs() <= *tol))
            }
            Expectation::Fidelity { target, threshold } => {
                let Some(state) = self.state() else { return Ok((None, false)) };
                let value = match target {
                    StateLiteral::Inline(v) => v.clone(),
                    StateLiteral::File(p) => {
                        let path = resolve_path(self.opts, p);
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
                    }
                };
                let target = KetState::from_json_value(&value, Some(state.registry()))
                    .and_then(|t| t.normalized())
                    .map_err(|e| format!("state literal: {e}"))?;
                let current = state.normalized().map_err(|e| e.to_string())?;
                let f = fidelity(&current, &target).map_err(|e| e.to_string())?.fidelity;
                Ok((Some(f), f >= *threshold))
            }
            Expectation::Entropy { part, value, tol } => {
                let Some(state) = self.state() else { return Ok((None, false)) };
                let s = entropy_of(state, &self.expand(part))?;
                Ok((Some(s), (s - value).abs() <= *tol))
            }
        }
    }
}

fn seconds(d: &Duration, auto: f64) -> f64 {
    match d {
        Duration::Auto => auto,
        Duration::Fixed { seconds, .. } => *seconds,
    }
}

fn cavity_ket(id: &str, init: CavityInit, nmax: usize) -> Result<KetState, ProtocolError> {
    if init == CavityInit::Plus && nmax == 1 {
        return cavity_plus(id);
    }
    let spec = SubsystemSpec::cavity(id, nmax)?;
    let one = Complex64::new(1.0, 0.0);
    let terms = match init {
        CavityInit::Vacuum => vec![(BasisConfig::new().with(id, "0"), one)],
        CavityInit::One => vec![(BasisConfig::new().with(id, "1"), one)],
        CavityInit::Plus => vec![
            (BasisConfig::new().with(id, "0"), one),
            (BasisConfig::new().with(id, "1"), one),
        ],
    };
    Ok(KetState::new(vec![spec], terms, true)?)
}

/// Internal ids of all atoms first, then momentum ids.
fn measured_ids(atoms: &[String], parts: Parts) -> Vec<String> {
    let mut ids = Vec::new();
    if parts.internal {
        ids.extend(atoms.iter().map(|a| AtomIds::of(a).internal));
    }
    if parts.momentum {
        ids.extend(atoms.iter().map(|a| AtomIds::of(a).momentum));
    }
    ids
}

fn entropy_of(state: &KetState, part: &[String]) -> Result<f64, String> {
    let refs: Vec<&str> = part.iter().map(String::as_str).collect();
    let normalized = state.normalized().map_err(|e| e.to_string())?;
    entanglement_entropy(&normalized, &refs).map_err(|e| e.to_string())
}

/// Every joint label assignment of `ids`, in basis order.
fn enumerate_outcomes(
    state: &KetState,
    ids: &[&str],
    part: Option<&[String]>,
) -> Result<Vec<OutcomeRow>, String> {
    let bases = ids
        .iter()
        .map(|id| state.subsystem(id).map(|s| s.basis().to_vec()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let total: usize = bases.iter().map(Vec::len).product();
    let mut rows = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut labels = vec![""; ids.len()];
        for (slot, basis) in labels.iter_mut().zip(&bases).rev() {
            *slot = basis[k % basis.len()].as_str();
            k /= basis.len();
        }
        let assignment = BasisConfig::from_pairs(ids.iter().copied().zip(labels.iter().copied()));
        let projection = state.project_and_collapse(&assignment).map_err(|e| e.to_string())?;
        let (probability, conditional) = match projection {
            Projection::Outcome { probability, state } => (probability, Some(state)),
            Projection::Impossible => (0.0, None),
        };
        let entropy = match (part, &conditional) {
            (Some(part), Some(s)) => Some(entropy_of(s, part)?),
            _ => None,
        };
        let state = match conditional {
            Some(mut s) => {
                for id in ids {
                    s = s.drop_product_subsystem(id).map_err(|e| e.to_string())?;
                }
                Some(s.canonical_phase().to_json_value())
            }
            None => None,
        };
        rows.push(OutcomeRow { outcome: labels.join(","), probability, entropy, state });
    }
    Ok(rows)
}

/// Execute a parsed script. Expect failures are reported, not raised.
pub fn run(script: &Script, opts: &RunOptions) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let top = |message: String| RunError { line: None, statement: String::new(), message };
    let preset = resolve_params(opts, DEFAULT_PRESET).map_err(top)?;
    let mut runner = Runner {
        opts,
        params: preset.params,
        preset,
        tracer: None,
        selections: Vec::new(),
        tables: Vec::new(),
        oracle: Vec::new(),
        expects: Vec::new(),
    };

    for s in &script.statements {
        runner.exec(s.line, &s.step).map_err(|m| err(s.line, &s.step, m))?;
    }

    let lifetime = runner
        .preset
        .notes
        .cavity_lifetime
        .map(|q| q.to_si(FrequencyReading::Angular));
    let regime = validate_bragg_regime(&runner.params, lifetime);
    let trace = runner.tracer.map(Tracer::finish);
    let steps = match (&trace, opts.trace) {
        (Some(t), true) => Some(PipelineReport::from_trace(t, &runner.params).steps),
        (None, true) => Some(Vec::new()),
        _ => None,
    };
    Ok(RunReport {
        script_hash: script_hash(script),
        preset: runner.preset.name,
        params: runner.params,
        regime,
        steps,
        selections: runner.selections,
        outcome_tables: runner.tables,
        oracle: runner.oracle,
        expects: runner.expects,
        probability: trace.as_ref().map_or(1.0, |t| t.probability),
        final_state: trace
            .and_then(|t| t.final_state)
            .map(|s| s.canonical_phase().to_json_value()),
        wall_time: started.elapsed(),
    })
}
