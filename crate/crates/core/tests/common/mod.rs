#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use protosim_core::metrics::fidelity;
use protosim_core::statekit::{BasisConfig, KetState, SubsystemSpec};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ket from terms written as `a1=g,P0 a4=e,P-2 cA=0 s=g`.
///
/// `name=level,momentum` is an atom, `name=<digit>` a one-photon cavity and
/// `name=g|e` a bare internal level. The registry follows the first term.
pub fn ket(terms: &[(Complex64, &str)]) -> KetState {
    let mut registry = Vec::new();
    for tok in terms[0].1.split_whitespace() {
        let (name, value) = tok.split_once('=').expect("name=value");
        if value.contains(',') {
            registry.push(SubsystemSpec::atom_internal(format!("{name}.int")));
            registry.push(SubsystemSpec::atom_momentum(format!("{name}.mom")));
        } else if value.chars().all(|ch| ch.is_ascii_digit()) {
            registry.push(SubsystemSpec::cavity(name, 1).unwrap());
        } else {
            registry.push(SubsystemSpec::atom_internal(name));
        }
    }
    let parsed = terms
        .iter()
        .map(|(amp, text)| {
            let mut cfg = BasisConfig::new();
            for tok in text.split_whitespace() {
                let (name, value) = tok.split_once('=').unwrap();
                match value.split_once(',') {
                    Some((level, mom)) => {
                        cfg = cfg
                            .with(format!("{name}.int"), level)
                            .with(format!("{name}.mom"), mom);
                    }
                    None => cfg = cfg.with(name, value),
                }
            }
            (cfg, *amp)
        })
        .collect();
    KetState::new(registry, parsed, true).unwrap()
}

/// |⟨a|b⟩|² of the normalized states.
pub fn fid(a: &KetState, b: &KetState) -> f64 {
    fidelity(&a.normalized().unwrap(), &b.normalized().unwrap())
        .unwrap()
        .fidelity
}

/// Dense state vector over named qubits; qubit 0 is the most significant bit.
#[derive(Clone, Debug)]
pub struct Dense {
    pub names: Vec<String>,
    pub amps: Vec<Complex64>,
}

impl Dense {
    pub fn zero(names: &[&str]) -> Self {
        let mut amps = vec![Complex64::default(); 1 << names.len()];
        amps[0] = c(1.0, 0.0);
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            amps,
        }
    }

    pub fn bit(&self, name: &str) -> usize {
        let q = self.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("{name}"));
        self.names.len() - 1 - q
    }

    /// Apply a `2^k × 2^k` matrix (row-major) to the listed qubits.
    pub fn apply(&mut self, qubits: &[&str], m: &[Complex64]) {
        let bits: Vec<usize> = qubits.iter().map(|q| self.bit(q)).collect();
        let k = bits.len();
        let d = 1 << k;
        assert_eq!(m.len(), d * d);
        let mask: usize = bits.iter().map(|b| 1 << b).sum();
        let mut out = vec![Complex64::default(); self.amps.len()];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            let index = |local: usize| -> usize {
                let mut i = base;
                for (j, b) in bits.iter().enumerate() {
                    if local >> (k - 1 - j) & 1 == 1 {
                        i |= 1 << b;
                    }
                }
                i
            };
            for col in 0..d {
                let a = self.amps[index(col)];
                if a == Complex64::default() {
                    continue;
                }
                for row in 0..d {
                    out[index(row)] += m[row * d + col] * a;
                }
            }
        }
        self.amps = out;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Zero every amplitude where `keep` is false; returns the kept weight
    /// relative to the previous norm.
    pub fn project<F: Fn(&Self, usize) -> bool>(&mut self, keep: F) -> f64 {
        let before = self.norm_sqr();
        let mask: Vec<bool> = (0..self.amps.len()).map(|i| keep(self, i)).collect();
        for (a, k) in self.amps.iter_mut().zip(mask) {
            if !k {
                *a = Complex64::default();
            }
        }
        self.norm_sqr() / before
    }

    pub fn value(&self, index: usize, name: &str) -> usize {
        index >> self.bit(name) & 1
    }

    /// Amplitudes of the sub-register `keep`, assuming every other qubit
    /// is in a definite state.
    pub fn restrict(&self, keep: &[&str]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); 1 << keep.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut j = 0;
            for q in keep {
                j = j << 1 | self.value(i, q);
            }
            out[j] += a;
        }
        out
    }
}

pub fn hadamard() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]
}

/// Bragg propagator on (internal, momentum, cavity) in the basis
/// `|int mom n⟩`, with `route` restricting it to one internal level.
pub fn bragg_matrix(beta_t: f64, route: Option<usize>) -> Vec<Complex64> {
    let mut m = vec![Complex64::default(); 64];
    let phase = Complex64::cis(2.0 * beta_t);
    for int in 0..2 {
        for n in 0..2 {
            let active = (int, n) == (0, 1) || (int, n) == (1, 0);
            let routed = route.map_or(true, |r| r == int);
            for mom_in in 0..2 {
                for mom_out in 0..2 {
                    let row = int << 2 | mom_out << 1 | n;
                    let col = int << 2 | mom_in << 1 | n;
                    m[row * 8 + col] = if active && routed {
                        phase
                            * if mom_in == mom_out {
                                c(beta_t.cos(), 0.0)
                            } else {
                                c(0.0, beta_t.sin())
                            }
                    } else if mom_in == mom_out {
                        c(1.0, 0.0)
                    } else {
                        Complex64::default()
                    };
                }
            }
        }
    }
    m
}

/// Resonant exchange on (aux internal, cavity) for `μt = π/2`.
pub fn exchange_matrix() -> Vec<Complex64> {
    // basis |g0⟩, |g1⟩, |e0⟩, |e1⟩
    let z = Complex64::default();
    let one = c(1.0, 0.0);
    let mi = c(0.0, -1.0);
    vec![
        one, z, z, z, //
        z, z, mi, z, //
        z, mi, z, z, //
        z, z, z, one,
    ]
}

/// `g → e`, `e → −g` on the internal qubit, only on the `P-2` arm.
pub fn arm_flip_matrix() -> Vec<Complex64> {
    // basis |int mom⟩
    let z = Complex64::default();
    let one = c(1.0, 0.0);
    vec![
        one, z, z, z, //
        z, z, z, -one, //
        z, z, one, z, //
        z, one, z, z,
    ]
}

pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Declarations every [`script_statement`] may refer to.
pub const SCRIPT_PRELUDE: &str =
    "params rb85 delta_over_omega_r=1e3\ncavity c1 plus\ncavity c2 0 nmax=2\natom a1 g P0\natom a2 e P-2\n";

/// One random statement over the ids of [`SCRIPT_PRELUDE`], with random spacing and comments.
pub fn script_statement() -> impl Strategy<Value = String> {
    let atom = prop::sample::select(vec!["a1", "a2"]);
    let cav = prop::sample::select(vec!["c1", "c2"]);
    let level = prop::sample::select(vec!["g", "e"]);
    let arm = prop::sample::select(vec!["P0", "P-2", "all"]);
    let angle = prop::sample::select(vec!["pi", "-pi/2", "3*pi/4", "0", "0.125", "2*pi/3"]);
    let num = prop::sample::select(vec!["0.5", "1", "1e-9", "0.999", "2.5e-3"]);
    let dur = prop::sample::select(vec!["auto", "13us", "1e-4", "0.5ms"]);
    let conv = prop::sample::select(vec!["minus", "plus"]);
    let space = prop::sample::select(vec![" ", "  ", "\t"]);
    let comment = prop::sample::select(vec!["", " # note", "\t#{x}"]);
    (
        0..9usize,
        (atom, cav, level, arm),
        (angle.clone(), angle, num.clone(), num),
        (dur, conv, space, comment),
    )
        .prop_map(|(k, (a, c, l, arm), (t, p, x, y), (d, cv, s, cm))| {
            let body = match k {
                0 => format!("bragg{s}{a} {c} {d}{}", if l == "g" { "" } else { " route=e" }),
                1 => format!("pulse {a}{s}{arm} {t} {p} {cv}"),
                2 => format!("ramsey {a}"),
                3 => format!("hadamard-momentum{s}{a}"),
                4 => format!("expect entropy {a},{c} {x} {y}"),
                5 => format!("expect probability {x}{s}{y}"),
                6 => format!("measure a1,a2 int enumerate entropy={a}"),
                7 => format!("oracle branch={l} beta_t={t} lmax=3"),
                _ => format!(
                    "expect fidelity {{\"amplitudes\":[{{\"config\":{{\"{a}.int\":\"{l}\"}},\"re\":{x},\"im\":-{y}}}]}} {x}"
                ),
            };
            format!("{body}{cm}")
        })
}
