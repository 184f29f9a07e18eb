use num_complex::Complex64;
use serde::Serialize;

use super::{AmplitudeLadder, DynamicsError, LadderArray, Result};
use crate::params::PhysicalParams;

/// Boundary population above which a truncation warning is raised.
pub const LEAKAGE_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub l_max: i32,
    /// Target max amplitude change between successive step doublings.
    pub tol: f64,
    /// Refinement stops with an error beyond this many steps.
    pub max_steps: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            l_max: 6,
            tol: 1e-8,
            max_steps: 1 << 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRun {
    #[serde(skip)]
    pub ladder: AmplitudeLadder,
    pub steps: u64,
    pub refinement_diff: f64,
    pub norm_drift: f64,
    /// Population at `|l| = l_max`.
    pub leakage: f64,
    pub truncation_warning: bool,
}

/// Integrate the full truncated ladder (no adiabatic elimination).
///
/// The equations are solved in the interaction picture of their diagonal
/// part, so the Δ phase is exact and RK4 only resolves the couplings. The
/// fixed step count doubles until two successive solutions differ by less
/// than `tol` in every amplitude.
pub fn bragg_ode_oracle(
    initial: &AmplitudeLadder,
    params: &PhysicalParams,
    duration: f64,
    opts: OracleOptions,
) -> Result<OracleRun> {
    if !(opts.tol > 0.0) {
        return Err(DynamicsError::InvalidArgument("tol must be positive".into()));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(DynamicsError::InvalidArgument(format!(
            "duration must be finite and non-negative, got {duration}"
        )));
    }
    let start = initial.resized(opts.l_max)?;
    let system = Ladder::new(&start, params);
    let n0 = start.norm_sqr();

    let (z, steps, diff) = if duration == 0.0 {
        (system.z0.clone(), 0, 0.0)
    } else {
        let mut n = system.initial_steps(duration);
        let mut coarse = system.integrate(duration, n);
        loop {
            if 2 * n > opts.max_steps {
                return Err(DynamicsError::Integrator(format!(
                    "no convergence to {:e} within {} steps",
                    opts.tol, opts.max_steps
                )));
            }
            let fine = system.integrate(duration, 2 * n);
            let diff = max_diff(&coarse, &fine);
            n *= 2;
            if diff < opts.tol {
                break (fine, n, diff);
            }
            log::debug!("oracle: {n} steps, refinement diff {diff:e}");
            coarse = fine;
        }
    };

    let ladder = system.finish(&start, &z, duration);
    let norm_drift = (ladder.norm_sqr() - n0).abs();
    if norm_drift > 10.0 * opts.tol {
        return Err(DynamicsError::Integrator(format!(
            "norm drift {norm_drift:e} exceeds 10 x tol"
        )));
    }
    let leakage = ladder.boundary_population();
    let truncation_warning = leakage > LEAKAGE_WARN;
    if truncation_warning {
        log::warn!("oracle: boundary population {leakage:e} at l_max = {}", opts.l_max);
    }
    Ok(OracleRun {
        ladder,
        steps,
        refinement_diff: diff,
        norm_drift,
        leakage,
        truncation_warning,
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Coupled bright/intermediate arrays in the interaction picture.
///
/// Full layout is `[bright(-L..=L), intermediate(-L..=L)]`; only entries
/// connected to the initial support are integrated (the two parity classes
/// never mix).
struct Ladder {
    len: usize,
    half_mu: f64,
    /// Full-layout energies.
    w: Vec<f64>,
    kinetic: Vec<f64>,
    /// Full-layout index of each integrated entry.
    active: Vec<usize>,
    /// Neighbours of each integrated entry in compact indices; a missing
    /// neighbour points at the zero pad one past the end.
    nbrs: Vec<[usize; 2]>,
    w_act: Vec<f64>,
    z0: Vec<Complex64>,
}

impl Ladder {
    fn new(start: &AmplitudeLadder, params: &PhysicalParams) -> Self {
        let l_max = start.l_max();
        let wr = params.omega_r();
        let l0 = params.l0 as f64;
        let kinetic: Vec<f64> = start
            .l_range()
            .map(|l| {
                let l = l as f64;
                l * (l0 + l) * wr
            })
            .collect();
        let len = (2 * l_max + 1) as usize;
        let mut w = kinetic.clone();
        w.extend(std::iter::repeat(params.delta).take(len));
        let mut full = start.array(LadderArray::Bright).to_vec();
        full.extend_from_slice(start.array(LadderArray::Intermediate));

        let neighbours = |j: usize| -> Vec<usize> {
            let (l, other) = if j < len { (j, len) } else { (j - len, 0) };
            let mut v = Vec::with_capacity(2);
            if l > 0 {
                v.push(other + l - 1);
            }
            if l + 1 < len {
                v.push(other + l + 1);
            }
            v
        };
        let mut seen = vec![false; 2 * len];
        let mut stack: Vec<usize> = (0..2 * len)
            .filter(|&j| full[j] != Complex64::default())
            .collect();
        while let Some(j) = stack.pop() {
            if std::mem::replace(&mut seen[j], true) {
                continue;
            }
            stack.extend(neighbours(j).into_iter().filter(|&k| !seen[k]));
        }
        let active: Vec<usize> = (0..2 * len).filter(|&j| seen[j]).collect();
        let mut compact = vec![usize::MAX; 2 * len];
        for (c, &j) in active.iter().enumerate() {
            compact[j] = c;
        }
        let pad = active.len();
        let nbrs = active
            .iter()
            .map(|&j| {
                let mut pair = [pad; 2];
                for (slot, k) in pair.iter_mut().zip(neighbours(j)) {
                    *slot = compact[k];
                }
                pair
            })
            .collect();
        Self {
            len,
            half_mu: params.mu / 2.0,
            w_act: active.iter().map(|&j| w[j]).collect(),
            z0: active.iter().map(|&j| full[j]).collect(),
            w,
            kinetic,
            active,
            nbrs,
        }
    }

    /// Step count at which `h · ω_max ≈ 1/4`.
    fn initial_steps(&self, duration: f64) -> u64 {
        let mut spread = 0.0f64;
        for (j, nb) in self.nbrs.iter().enumerate() {
            for &k in nb.iter().filter(|&&k| k < self.w_act.len()) {
                spread = spread.max((self.w_act[j] - self.w_act[k]).abs());
            }
        }
        let omega_max = spread + 2.0 * self.half_mu;
        ((duration * omega_max / 0.25).ceil() as u64).max(16)
    }

    /// `ż = -i p ∘ V (p̄ ∘ z)`.
    fn rhs(&self, p: &[Complex64], z: &[Complex64], u: &mut [Complex64], out: &mut [Complex64]) {
        for ((u, p), z) in u.iter_mut().zip(p).zip(z) {
            *u = p.conj() * z;
        }
        let coupling = Complex64::new(0.0, -self.half_mu);
        for (j, &[a, b]) in self.nbrs.iter().enumerate() {
            out[j] = coupling * p[j] * (u[a] + u[b]);
        }
    }

    fn phasors(&self, t: f64, p: &mut [Complex64]) {
        for (p, w) in p.iter_mut().zip(&self.w_act) {
            *p = Complex64::cis(w * t);
        }
    }

    fn integrate(&self, duration: f64, steps: u64) -> Vec<Complex64> {
        const RESYNC: u64 = 1024;
        let dim = self.z0.len();
        let h = duration / steps as f64;
        let half: Vec<Complex64> = self.w_act.iter().map(|w| Complex64::cis(w * h / 2.0)).collect();
        let mut z = self.z0.clone();
        let mut p0 = vec![Complex64::default(); dim];
        let mut pm = p0.clone();
        let mut p1 = p0.clone();
        let mut u = vec![Complex64::default(); dim + 1];
        let mut tmp = p0.clone();
        let (mut k1, mut k2, mut k3, mut k4) = (p0.clone(), p0.clone(), p0.clone(), p0.clone());
        for s in 0..steps {
            if s % RESYNC == 0 {
                self.phasors(s as f64 * h, &mut p0);
            }
            for j in 0..dim {
                pm[j] = p0[j] * half[j];
                p1[j] = pm[j] * half[j];
            }
            self.rhs(&p0, &z, &mut u, &mut k1);
            for j in 0..dim {
                tmp[j] = z[j] + k1[j] * (h / 2.0);
            }
            self.rhs(&pm, &tmp, &mut u, &mut k2);
            for j in 0..dim {
                tmp[j] = z[j] + k2[j] * (h / 2.0);
            }
            self.rhs(&pm, &tmp, &mut u, &mut k3);
            for j in 0..dim {
                tmp[j] = z[j] + k3[j] * h;
            }
            self.rhs(&p1, &tmp, &mut u, &mut k4);
            for j in 0..dim {
                z[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
            }
            std::mem::swap(&mut p0, &mut p1);
        }
        z
    }

    /// Back to the lab frame; the spectator array only gains kinetic phase.
    fn finish(&self, start: &AmplitudeLadder, z: &[Complex64], t: f64) -> AmplitudeLadder {
        let mut out = start.clone();
        let n = self.len;
        for (dst, k) in out
            .array_mut(LadderArray::Spectator)
            .iter_mut()
            .zip(&self.kinetic)
        {
            *dst *= Complex64::cis(-k * t);
        }
        for (&j, &zj) in self.active.iter().zip(z) {
            let y = Complex64::cis(-self.w[j] * t) * zj;
            if j < n {
                out.array_mut(LadderArray::Bright)[j] = y;
            } else {
                out.array_mut(LadderArray::Intermediate)[j - n] = y;
            }
        }
        out
    }
}
