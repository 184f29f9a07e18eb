use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use super::{mode_slot, DynamicsError, Result};
use crate::statekit::{KetState, NormTag, Projection, SubsystemSpec};

/// Symmetric splitter `a₂ = (a₀ + i a₁)/√2`, `a₃ = (i a₀ + a₁)/√2`.
///
/// Inputs are removed; outputs are appended as fresh detector modes with a
/// cutoff of one photon.
pub fn beam_splitter(
    state: &KetState,
    in0: &str,
    in1: &str,
    out2: &str,
    out3: &str,
) -> Result<KetState> {
    if in0 == in1 || out2 == out3 {
        return Err(DynamicsError::InvalidArgument("splitter ports must be distinct".into()));
    }
    let (p0, n0) = mode_slot(state, in0)?;
    let (p1, n1) = mode_slot(state, in1)?;
    for out in [out2, out3] {
        if state.has_subsystem(out) && out != in0 && out != in1 {
            return Err(DynamicsError::InvalidArgument(format!(
                "output mode {out:?} already exists"
            )));
        }
    }
    for key in state.raw_amplitudes().keys() {
        let total = n0[key[p0] as usize] + n1[key[p1] as usize];
        if total > 1 {
            return Err(DynamicsError::UnsupportedSector {
                op: "beam splitter",
                detail: format!("{total} photons across {in0:?} and {in1:?}"),
            });
        }
    }
    let keep: Vec<usize> = (0..state.registry().len())
        .filter(|&p| p != p0 && p != p1)
        .collect();
    let mut registry: Vec<SubsystemSpec> = keep.iter().map(|&p| state.registry()[p].clone()).collect();
    registry.push(SubsystemSpec::detector(out2, 1)?);
    registry.push(SubsystemSpec::detector(out3, 1)?);

    let h = FRAC_1_SQRT_2;
    let (re, im) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    let out = state.map_configs(registry, state.norm_tag(), |k| {
        let base: Vec<u16> = keep.iter().map(|&p| k[p]).collect();
        let with = |a: u16, b: u16| {
            let mut v = base.clone();
            v.push(a);
            v.push(b);
            v
        };
        Ok(match (n0[k[p0] as usize], n1[k[p1] as usize]) {
            (0, 0) => vec![(with(0, 0), Complex64::new(1.0, 0.0))],
            (1, 0) => vec![(with(1, 0), re), (with(0, 1), im)],
            _ => vec![(with(1, 0), im), (with(0, 1), re)],
        })
    })?;
    Ok(out)
}

/// One photon-count outcome of [`detect_photons`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionOutcome {
    /// `(mode id, count)` in the order the modes were given.
    pub counts: Vec<(String, usize)>,
    pub probability: f64,
    /// Exactly one photon in total.
    pub success: bool,
    /// Renormalized conditional state with the measured modes removed;
    /// `None` when nothing else is left.
    #[serde(skip)]
    pub state: Option<KetState>,
}

impl DetectionOutcome {
    /// `D1=1,D2=0` style label.
    pub fn label(&self) -> String {
        self.counts
            .iter()
            .map(|(id, n)| format!("{id}={n}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Enumerate photon-count outcomes on `modes`, sorted by count tuple.
pub fn detect_photons(state: &KetState, modes: &[&str]) -> Result<Vec<DetectionOutcome>> {
    let slots = modes
        .iter()
        .map(|m| mode_slot(state, m))
        .collect::<Result<Vec<_>>>()?;
    let total = state.norm_sqr();
    if !(total > 0.0) {
        return Err(DynamicsError::InvalidArgument("cannot detect on a zero state".into()));
    }
    let measured: Vec<usize> = slots.iter().map(|(p, _)| *p).collect();
    let keep: Vec<usize> = (0..state.registry().len())
        .filter(|p| !measured.contains(p))
        .collect();
    let registry: Vec<SubsystemSpec> = keep.iter().map(|&p| state.registry()[p].clone()).collect();

    let mut groups: BTreeMap<Vec<usize>, BTreeMap<Vec<u16>, Complex64>> = BTreeMap::new();
    for (key, amp) in state.raw_amplitudes() {
        let counts: Vec<usize> = slots.iter().map(|(p, n)| n[key[*p] as usize]).collect();
        let rest: Vec<u16> = keep.iter().map(|&p| key[p]).collect();
        *groups.entry(counts).or_default().entry(rest).or_default() += amp;
    }

    let mut out = Vec::with_capacity(groups.len());
    for (counts, amps) in groups {
        let weight: f64 = amps.values().map(|a| a.norm_sqr()).sum();
        let probability = weight / total;
        let conditional = if registry.is_empty() {
            None
        } else {
            let scale = Complex64::new(1.0 / weight.sqrt(), 0.0);
            let amps = amps.into_iter().map(|(k, a)| (k, a * scale)).collect();
            Some(KetState::from_parts(
                registry.clone(),
                amps,
                NormTag::PostSelected { probability },
            )?)
        };
        out.push(DetectionOutcome {
            success: counts.iter().sum::<usize>() == 1,
            counts: modes.iter().map(|m| m.to_string()).zip(counts).collect(),
            probability,
            state: conditional,
        });
    }
    Ok(out)
}

/// Coherent projection onto `Σ n = total` over `modes`.
///
/// Returns the distribution of the total photon number and the projection.
pub fn postselect_photon_number(
    state: &KetState,
    modes: &[&str],
    total: usize,
) -> Result<(Vec<(usize, f64)>, Projection)> {
    let slots = modes
        .iter()
        .map(|m| mode_slot(state, m))
        .collect::<Result<Vec<_>>>()?;
    let count = |c: &crate::statekit::ConfigRef<'_>| -> usize {
        slots.iter().map(|(p, n)| n[c.index_at(*p)]).sum()
    };
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(DynamicsError::InvalidArgument("cannot post-select a zero state".into()));
    }
    let mut dist: BTreeMap<usize, f64> = BTreeMap::new();
    for (c, a) in state.iter() {
        *dist.entry(count(&c)).or_default() += a.norm_sqr() / norm;
    }
    let projection = state.project_where(|c| count(&c) == total)?;
    Ok((dist.into_iter().collect(), projection))
}
