use rayon::prelude::*;
use serde::Serialize;

use super::{
    bragg_ode_oracle, closed_form_ladder, AmplitudeLadder, Branch, LadderArray, OracleOptions,
    Result,
};
use crate::params::PhysicalParams;

pub const SWEEP_CSV_HEADER: &str =
    "delta_over_omega_r,beta_t,infidelity,norm_drift,leakage,transfer_probability,steps";

/// Closed form vs integrator at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabaticPoint {
    pub delta_over_omega_r: f64,
    pub beta_t: f64,
    pub infidelity: f64,
    pub norm_drift: f64,
    pub leakage: f64,
    /// Integrator population moved to the partner momentum, relative to the
    /// bright-sector population at t = 0.
    pub transfer_probability: f64,
    pub steps: u64,
}

fn initial(branch: Branch, l_max: i32) -> Result<AmplitudeLadder> {
    match branch {
        Branch::GroundInitial => AmplitudeLadder::ground_superposition(l_max),
        Branch::ExcitedInitial => AmplitudeLadder::excited_superposition(l_max),
    }
}

/// Run the integrator at `params` for `βt = beta_t` from the equal
/// superposition of the spectator and bright sectors.
pub fn adiabatic_point(
    params: &PhysicalParams,
    beta_t: f64,
    branch: Branch,
    opts: OracleOptions,
) -> Result<AdiabaticPoint> {
    let start = initial(branch, opts.l_max)?;
    let duration = beta_t / params.beta();
    let run = bragg_ode_oracle(&start, params, duration, opts)?;
    let closed = closed_form_ladder(&start, params, duration)?;
    let (from, to) = match branch {
        Branch::GroundInitial => (0, -2),
        Branch::ExcitedInitial => (-2, 0),
    };
    let bright0 = start.get(LadderArray::Bright, from).norm_sqr();
    Ok(AdiabaticPoint {
        delta_over_omega_r: params.delta_over_omega_r(),
        beta_t,
        infidelity: closed.infidelity(&run.ladder)?,
        norm_drift: run.norm_drift,
        leakage: run.leakage,
        transfer_probability: run.ladder.get(LadderArray::Bright, to).norm_sqr() / bright0,
        steps: run.steps,
    })
}

/// Sweep Δ/ω_r holding β fixed (μ follows). Rows come back in input order.
pub fn adiabatic_sweep(
    base: &PhysicalParams,
    ratios: &[f64],
    beta_t: f64,
    branch: Branch,
    opts: OracleOptions,
) -> Result<Vec<AdiabaticPoint>> {
    ratios
        .par_iter()
        .map(|&r| adiabatic_point(&base.at_ratio(r), beta_t, branch, opts))
        .collect()
}

impl AdiabaticPoint {
    /// One CSV record in [`SWEEP_CSV_HEADER`] order, without newline.
    pub fn csv_fields(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.delta_over_omega_r,
            self.beta_t,
            self.infidelity,
            self.norm_drift,
            self.leakage,
            self.transfer_probability,
            self.steps
        )
    }
}

pub fn sweep_csv(rows: &[AdiabaticPoint]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_fields());
        out.push('\n');
    }
    out
}
