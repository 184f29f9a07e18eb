use num_complex::Complex64;

use super::{internal_slot, mode_slot, DynamicsError, Result};
use crate::params::PhysicalParams;
use crate::statekit::KetState;

/// Resonant exchange `H = μ(σ₊b + σ₋b†)` restricted to at most one excitation.
///
/// `|g,1⟩ → cos μt |g,1⟩ − i sin μt |e,0⟩` and its partner; `|g,0⟩` is fixed.
pub fn jc_resonant(
    state: &KetState,
    atom_internal: &str,
    cavity: &str,
    params: &PhysicalParams,
    duration: f64,
) -> Result<KetState> {
    if !duration.is_finite() {
        return Err(DynamicsError::InvalidArgument("duration must be finite".into()));
    }
    let (ip, g, e) = internal_slot(state, atom_internal)?;
    let (cp, photons) = mode_slot(state, cavity)?;
    let one = photons.iter().position(|&n| n == 1);
    let zero = photons.iter().position(|&n| n == 0);
    for key in state.raw_amplitudes().keys() {
        let n = photons[key[cp] as usize];
        let excitations = n + usize::from(key[ip] == e);
        if excitations > 1 {
            return Err(DynamicsError::UnsupportedSector {
                op: "jc",
                detail: format!(
                    "{} excitations in ({}, n={n})",
                    excitations,
                    state.registry()[ip].label(key[ip] as usize)
                ),
            });
        }
    }
    let (Some(one), Some(zero)) = (one, zero) else {
        return Err(DynamicsError::MissingLabel {
            id: cavity.to_string(),
            label: "0/1".into(),
        });
    };
    let (one, zero) = (one as u16, zero as u16);
    let (c, s) = ((params.mu * duration).cos(), (params.mu * duration).sin());
    let out = state.map_configs(state.registry().to_vec(), state.norm_tag(), |k| {
        let mut partner = k.to_vec();
        if k[ip] == g && k[cp] == one {
            partner[ip] = e;
            partner[cp] = zero;
        } else if k[ip] == e && k[cp] == zero {
            partner[ip] = g;
            partner[cp] = one;
        } else {
            return Ok(vec![(partner, Complex64::new(1.0, 0.0))]);
        }
        Ok(vec![
            (k.to_vec(), Complex64::new(c, 0.0)),
            (partner, Complex64::new(0.0, -s)),
        ])
    })?;
    Ok(out)
}
