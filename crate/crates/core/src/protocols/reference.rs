//! Closed-form target states of the pipelines.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::dynamics::{AtomIds, InternalLevel};
use crate::statekit::{BasisConfig, KetState, SubsystemSpec};

use super::{Detector, Result};

type AtomTerm<'a> = (&'a str, InternalLevel, &'a str);

/// Superposition of product kets over the named atoms, plus optional
/// leading cavity labels.
fn atoms_state(
    cavities: &[&str],
    atoms: &[&str],
    terms: Vec<(Vec<&str>, Vec<AtomTerm<'_>>, Complex64)>,
) -> Result<KetState> {
    let mut registry = Vec::new();
    for c in cavities {
        registry.push(SubsystemSpec::cavity(*c, 1)?);
    }
    for a in atoms {
        let ids = AtomIds::of(a);
        registry.push(SubsystemSpec::atom_internal(ids.internal));
        registry.push(SubsystemSpec::atom_momentum(ids.momentum));
    }
    let terms = terms
        .into_iter()
        .map(|(photons, atom_terms, amp)| {
            let mut cfg = BasisConfig::new();
            for (c, n) in cavities.iter().zip(photons) {
                cfg = cfg.with(*c, n);
            }
            for (a, level, mom) in atom_terms {
                let ids = AtomIds::of(a);
                cfg = cfg.with(ids.internal, level.label()).with(ids.momentum, mom);
            }
            (cfg, amp)
        })
        .collect();
    Ok(KetState::new(registry, terms, false)?)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

use InternalLevel::{E, G};

/// `(|0, g, g, P0, P0⟩ − |1, e, e, P-2, P-2⟩)/√2` before the cavity readout.
pub fn pre_readout_pair(cavity: &str, first: &str, second: &str) -> Result<KetState> {
    atoms_state(
        &[cavity],
        &[first, second],
        vec![
            (vec!["0"], vec![(first, G, "P0"), (second, G, "P0")], c(1.0, 0.0)),
            (vec!["1"], vec![(first, E, "P-2"), (second, E, "P-2")], c(-1.0, 0.0)),
        ],
    )
}

/// `(|g, g, P0, P0⟩ − i|e, e, P-2, P-2⟩)/√2`.
pub fn hyper_bell_pair(first: &str, second: &str) -> Result<KetState> {
    atoms_state(
        &[],
        &[first, second],
        vec![
            (vec![], vec![(first, G, "P0"), (second, G, "P0")], c(1.0, 0.0)),
            (vec![], vec![(first, E, "P-2"), (second, E, "P-2")], c(0.0, -1.0)),
        ],
    )
}

/// `(|e, g, P-2, P0⟩ − |g, e, P0, P-2⟩)/√2` on atoms `first`, `second`.
pub fn swapped_pair(first: &str, second: &str) -> Result<KetState> {
    atoms_state(
        &[],
        &[first, second],
        vec![
            (vec![], vec![(first, E, "P-2"), (second, G, "P0")], c(1.0, 0.0)),
            (vec![], vec![(first, G, "P0"), (second, E, "P-2")], c(-1.0, 0.0)),
        ],
    )
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// Two GHZ components with momenta anticorrelated between the halves:
/// `u |l1, P0…P0, P-2…P-2⟩ + v |l2, P-2…P-2, P0…P0⟩`.
fn two_halves(
    n: usize,
    levels: [InternalLevel; 2],
    amps: [Complex64; 2],
) -> Result<KetState> {
    let names = names(n);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let half = n / 2;
    let term = |level: InternalLevel, first_p0: bool| -> Vec<AtomTerm<'_>> {
        refs.iter()
            .enumerate()
            .map(|(i, a)| {
                let p0 = (i < half) == first_p0;
                (*a, level, if p0 { "P0" } else { "P-2" })
            })
            .collect()
    };
    atoms_state(
        &[],
        &refs,
        vec![
            (vec![], term(levels[0], true), amps[0]),
            (vec![], term(levels[1], false), amps[1]),
        ],
    )
}

/// State after photonic swapping, all atoms in `g`.
///
/// `D1`: `(|P0…P0, P-2…P-2⟩ + i|P-2…P-2, P0…P0⟩)/√2`; `D2` moves the `i`
/// to the first component.
pub fn momentum_swapped(n: usize, detector: Detector) -> Result<KetState> {
    let amps = match detector {
        Detector::D1 => [c(1.0, 0.0), c(0.0, 1.0)],
        Detector::D2 => [c(0.0, 1.0), c(1.0, 0.0)],
    };
    two_halves(n, [G, G], amps)
}

/// The `D1` state after π pulses on the `P0` arms of the first half and the
/// `P-2` arms of the second: `(iⁿ|e…e, P0…P-2…⟩ + i|g…g, P-2…P0…⟩)/√2`.
pub fn engineered_hyper(n: usize) -> Result<KetState> {
    let phase = Complex64::i().powu(n as u32);
    two_halves(n, [E, G], [phase * c(1.0, 0.0), c(0.0, 1.0)])
}
