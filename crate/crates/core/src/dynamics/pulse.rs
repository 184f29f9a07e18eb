use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{internal_slot, momentum_slot, AtomIds, DynamicsError, Result};
use crate::statekit::KetState;

/// Laser phase at which a `Minus` π pulse maps `|g⟩ → |e⟩` and `|e⟩ → −|g⟩`.
pub const REAL_FLIP_PHI: f64 = -PI / 2.0;

/// Sign of the semiclassical coupling.
///
/// `Minus`: `U = cos(θ/2) − i sin(θ/2)(e^{-iφ}σ₊ + e^{iφ}σ₋)`, i.e. `exp(-iHt)`.
/// `Plus`: `U = cos(θ/2) + i sin(θ/2)(e^{-iφ}σ₊ + e^{iφ}σ₋)`, so a π pulse
/// at φ = 0 gives `|g⟩ → i|e⟩`, `|e⟩ → i|g⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseConvention {
    Minus,
    #[default]
    Plus,
}

impl fmt::Display for PulseConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PulseConvention::Minus => "minus",
            PulseConvention::Plus => "plus",
        })
    }
}

impl FromStr for PulseConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "minus" => Ok(PulseConvention::Minus),
            "plus" => Ok(PulseConvention::Plus),
            other => Err(format!("unknown pulse convention {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Pulse area Ωt in radians. Negative values give the inverse pulse.
    pub theta: f64,
    pub phi: f64,
    /// Momentum label the pulse is restricted to; `None` hits every arm.
    pub arm: Option<String>,
    pub convention: PulseConvention,
}

impl PulseSpec {
    pub fn new(theta: f64, phi: f64, arm: Option<&str>, convention: PulseConvention) -> Self {
        Self {
            theta,
            phi,
            arm: arm.map(str::to_string),
            convention,
        }
    }

    /// π pulse giving `|g⟩ → |e⟩`, `|e⟩ → −|g⟩` on one arm.
    pub fn pi_real_flip(arm: &str) -> Self {
        Self::new(PI, REAL_FLIP_PHI, Some(arm), PulseConvention::Minus)
    }

    /// π pulse giving `|g⟩ → i|e⟩`, `|e⟩ → i|g⟩` on one arm.
    pub fn pi_imaginary_flip(arm: &str) -> Self {
        Self::new(PI, 0.0, Some(arm), PulseConvention::Plus)
    }

    /// 2×2 matrix in the `(g, e)` basis.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let sign = match self.convention {
            PulseConvention::Minus => -1.0,
            PulseConvention::Plus => 1.0,
        };
        let c = Complex64::new((self.theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, sign * (self.theta / 2.0).sin());
        // ⟨e|U|g⟩ carries e^{-iφ}, ⟨g|U|e⟩ carries e^{iφ}
        [
            [c, s * Complex64::cis(self.phi)],
            [s * Complex64::cis(-self.phi), c],
        ]
    }
}

/// Apply a classical Rabi pulse to the atom's internal level, on one arm.
pub fn classical_pulse(state: &KetState, atom: &AtomIds, pulse: &PulseSpec) -> Result<KetState> {
    if !(pulse.theta.is_finite() && pulse.phi.is_finite()) {
        return Err(DynamicsError::InvalidArgument("pulse angles must be finite".into()));
    }
    let (ip, g, e) = internal_slot(state, &atom.internal)?;
    let arm = match &pulse.arm {
        None => None,
        Some(label) => {
            let mp = state.position(&atom.momentum)?;
            let idx = state.registry()[mp].index_of(label).ok_or_else(|| {
                DynamicsError::MissingLabel {
                    id: atom.momentum.clone(),
                    label: label.clone(),
                }
            })?;
            Some((mp, idx as u16))
        }
    };
    let u = pulse.matrix();
    let out = state.map_configs(state.registry().to_vec(), state.norm_tag(), |k| {
        if let Some((mp, idx)) = arm {
            if k[mp] != idx {
                return Ok(vec![(k.to_vec(), Complex64::new(1.0, 0.0))]);
            }
        }
        let col = if k[ip] == g { 0 } else { 1 };
        let mut kg = k.to_vec();
        kg[ip] = g;
        let mut ke = k.to_vec();
        ke[ip] = e;
        Ok(vec![(kg, u[0][col]), (ke, u[1][col])])
    })?;
    Ok(out)
}

fn hadamard() -> DMatrix<Complex64> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// Symmetric Ramsey zone: `|g⟩ → (|g⟩+|e⟩)/√2`, `|e⟩ → (|g⟩−|e⟩)/√2`.
pub fn ramsey_zone(state: &KetState, atom_internal: &str) -> Result<KetState> {
    let (ip, g, e) = internal_slot(state, atom_internal)?;
    pair_hadamard(state, ip, g, e)
}

/// Momentum beam splitter: `|P0⟩ → (|P0⟩+|P-2⟩)/√2`, `|P-2⟩ → (|P0⟩−|P-2⟩)/√2`.
///
/// Other ladder labels, if present, are left alone.
pub fn momentum_hadamard(state: &KetState, atom_momentum: &str) -> Result<KetState> {
    let (mp, p0, pm2) = momentum_slot(state, atom_momentum)?;
    pair_hadamard(state, mp, p0, pm2)
}

fn pair_hadamard(state: &KetState, pos: usize, a: u16, b: u16) -> Result<KetState> {
    let spec = &state.registry()[pos];
    if spec.dim() == 2 {
        return Ok(state.apply_local_unitary(&[spec.id()], &hadamard())?);
    }
    let h = FRAC_1_SQRT_2;
    let out = state.map_configs(state.registry().to_vec(), state.norm_tag(), |k| {
        let x = k[pos];
        if x != a && x != b {
            return Ok(vec![(k.to_vec(), Complex64::new(1.0, 0.0))]);
        }
        let mut ka = k.to_vec();
        ka[pos] = a;
        let mut kb = k.to_vec();
        kb[pos] = b;
        let sign = if x == a { 1.0 } else { -1.0 };
        Ok(vec![
            (ka, Complex64::new(h, 0.0)),
            (kb, Complex64::new(sign * h, 0.0)),
        ])
    })?;
    Ok(out)
}
