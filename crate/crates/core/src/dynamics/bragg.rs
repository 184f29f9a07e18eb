use num_complex::Complex64;

use super::{
    internal_slot, mode_slot, momentum_slot, AmplitudeLadder, AtomIds, DynamicsError,
    InternalLevel, Result,
};
use crate::params::{PhysicalParams, RATIO_FAIL};
use crate::statekit::KetState;

const RATIO_WARN: f64 = 10.0;

fn check_regime(params: &PhysicalParams) -> Result<()> {
    let ratio = params.delta_over_omega_r();
    if !(ratio >= RATIO_FAIL) {
        return Err(DynamicsError::RegimeViolation { ratio });
    }
    if ratio < RATIO_WARN {
        log::warn!("delta/omega_r = {ratio:.3}: far from the off-resonant Bragg regime");
    }
    Ok(())
}

/// First-order Bragg propagator from adiabatic elimination.
///
/// In the sectors `(g, n=1)` and `(e, n=0)` the pair `(P0, P-2)` evolves by
/// `e^{2iβt} [[cos βt, i sin βt], [i sin βt, cos βt]]`; `(g, 0)` and `(e, 1)`
/// are untouched. Populated photon numbers above 1 are rejected.
pub fn bragg_closed_form(
    state: &KetState,
    atom: &AtomIds,
    cavity: &str,
    params: &PhysicalParams,
    duration: f64,
) -> Result<KetState> {
    bragg_closed_form_routed(state, atom, cavity, params, duration, None)
}

/// As [`bragg_closed_form`], restricted to configurations whose internal
/// level equals `route`. Models an arm that only passes through this cavity.
pub fn bragg_closed_form_routed(
    state: &KetState,
    atom: &AtomIds,
    cavity: &str,
    params: &PhysicalParams,
    duration: f64,
    route: Option<InternalLevel>,
) -> Result<KetState> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(DynamicsError::InvalidArgument(format!(
            "duration must be finite and non-negative, got {duration}"
        )));
    }
    check_regime(params)?;
    let (ip, g, e) = internal_slot(state, &atom.internal)?;
    let (mp, p0, pm2) = momentum_slot(state, &atom.momentum)?;
    let (cp, photons) = mode_slot(state, cavity)?;

    let routed = |k: &[u16]| match route {
        None => true,
        Some(InternalLevel::G) => k[ip] == g,
        Some(InternalLevel::E) => k[ip] == e,
    };
    for key in state.raw_amplitudes().keys() {
        if routed(key) && photons[key[cp] as usize] > 1 {
            return Err(DynamicsError::UnsupportedSector {
                op: "bragg",
                detail: format!("cavity {cavity:?} holds {} photons", photons[key[cp] as usize]),
            });
        }
    }

    let bt = params.beta() * duration;
    let phase = Complex64::cis(2.0 * bt);
    let diag = phase * bt.cos();
    let off = phase * Complex64::new(0.0, bt.sin());
    let out = state.map_configs(state.registry().to_vec(), state.norm_tag(), |k| {
        let n = photons[k[cp] as usize];
        let interacting = routed(k) && ((k[ip] == g && n == 1) || (k[ip] == e && n == 0));
        let m = k[mp];
        if !interacting || (m != p0 && m != pm2) {
            return Ok(vec![(k.to_vec(), Complex64::new(1.0, 0.0))]);
        }
        let mut partner = k.to_vec();
        partner[mp] = if m == p0 { pm2 } else { p0 };
        Ok(vec![(k.to_vec(), diag), (partner, off)])
    })?;
    Ok(out)
}

/// Closed-form evolution of a ladder, for comparison with the integrator.
pub fn closed_form_ladder(
    initial: &AmplitudeLadder,
    params: &PhysicalParams,
    duration: f64,
) -> Result<AmplitudeLadder> {
    let atom = AtomIds::of("atom");
    let ket = initial.to_ket(&atom, "cavity")?;
    let evolved = bragg_closed_form(&ket, &atom, "cavity", params, duration)?;
    AmplitudeLadder::from_ket(&evolved, initial.branch(), initial.l_max(), &atom, "cavity")
}
