//! Overlaps and entanglement measures on pure [`KetState`]s.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::statekit::{hermitian_eigenvalues, BasisConfig, KetState, StateError, NORM_TOLERANCE};

/// Eigenvalues in `(-NEG_HARD, CLIP]` are treated as zero.
pub const CLIP: f64 = 1e-12;
/// Eigenvalues below `-NEG_HARD` indicate a broken density matrix.
pub const NEG_HARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("state is not normalized (norm² = {0})")]
    Unnormalized(f64),
    #[error("density matrix has eigenvalue {0:e} below -1e-9")]
    NegativeEigenvalue(f64),
    #[error("invalid bipartition: {0}")]
    Bipartition(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapReport {
    /// `|⟨a|b⟩|²`.
    pub fidelity: f64,
    /// `arg ⟨a|b⟩` in radians.
    pub phase: f64,
    /// Same ids, but at least one subsystem carries a different label set;
    /// the overlap was taken label by label.
    pub basis_mismatch: bool,
}

/// Exact sparse overlap. Both states must hold the same subsystem ids.
pub fn fidelity(a: &KetState, b: &KetState) -> Result<OverlapReport> {
    let mut ids_a = a.ids();
    let mut ids_b = b.ids();
    ids_a.sort_unstable();
    ids_b.sort_unstable();
    if ids_a != ids_b {
        return Err(StateError::RegistryMismatch(format!("{:?} vs {:?}", a.ids(), b.ids())).into());
    }
    let basis_mismatch = a
        .registry()
        .iter()
        .any(|s| b.subsystem(s.id()).map(|t| t.basis() != s.basis()).unwrap_or(true));
    let inner = if basis_mismatch {
        let mut acc = Complex64::default();
        for (cfg, x) in a.iter() {
            let cfg: BasisConfig = cfg.to_basis_config();
            if let Ok(y) = b.amplitude(&cfg) {
                acc += x.conj() * y;
            }
        }
        acc
    } else {
        a.inner(b)?
    };
    Ok(OverlapReport {
        fidelity: inner.norm_sqr(),
        phase: inner.arg(),
        basis_mismatch,
    })
}

fn require_normalized(state: &KetState) -> Result<()> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(MetricsError::Unnormalized(n));
    }
    Ok(())
}

fn check_part(state: &KetState, part: &[&str]) -> Result<()> {
    if part.is_empty() {
        return Err(MetricsError::Bipartition("empty subsystem set".into()));
    }
    for id in part {
        state.position(id)?;
    }
    Ok(())
}

fn clipped(eigs: Vec<f64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(eigs.len());
    for l in eigs {
        if l < -NEG_HARD {
            return Err(MetricsError::NegativeEigenvalue(l));
        }
        out.push(if l <= CLIP { 0.0 } else { l });
    }
    Ok(out)
}

/// Von Neumann entropy in bits of the reduced state on `part`.
pub fn entanglement_entropy(state: &KetState, part: &[&str]) -> Result<f64> {
    require_normalized(state)?;
    check_part(state, part)?;
    if part.len() == state.registry().len() {
        return Ok(0.0);
    }
    let rho = state.reduced(part)?;
    let s = clipped(rho.eigenvalues())?
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>();
    Ok(s.max(0.0))
}

/// Schmidt coefficients across `part | rest`, descending.
pub fn schmidt_coefficients(state: &KetState, part: &[&str]) -> Result<Vec<f64>> {
    require_normalized(state)?;
    check_part(state, part)?;
    let rho = state.reduced(part)?;
    let mut c: Vec<f64> = clipped(rho.eigenvalues())?
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(f64::sqrt)
        .collect();
    c.sort_by(|a, b| b.total_cmp(a));
    Ok(c)
}

/// Negativity `Σ |λ₋|` of the partial transpose (on `party_b`) of the
/// reduced state on `party_a ∪ party_b`.
pub fn negativity(state: &KetState, party_a: &[&str], party_b: &[&str]) -> Result<f64> {
    require_normalized(state)?;
    check_part(state, party_a)?;
    check_part(state, party_b)?;
    if party_a.iter().any(|a| party_b.contains(a)) {
        return Err(MetricsError::Bipartition("parties overlap".into()));
    }
    let pos = |ids: &[&str]| -> Result<Vec<usize>> {
        Ok(ids.iter().map(|id| state.position(id)).collect::<std::result::Result<_, _>>()?)
    };
    let (pa, pb) = (pos(party_a)?, pos(party_b)?);
    let env: Vec<usize> = (0..state.registry().len())
        .filter(|p| !pa.contains(p) && !pb.contains(p))
        .collect();

    // local supports and the pure-state tensor ψ[env][(a, b)]
    let mut ia: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    let mut ib: BTreeMap<Vec<u16>, usize> = BTreeMap::new();
    let mut split = Vec::new();
    for (cfg, amp) in state.iter() {
        let key = |ps: &[usize]| -> Vec<u16> { ps.iter().map(|&p| cfg.index_at(p) as u16).collect() };
        let (ka, kb, ke) = (key(&pa), key(&pb), key(&env));
        let na = ia.len();
        let a = *ia.entry(ka).or_insert(na);
        let nb = ib.len();
        let b = *ib.entry(kb).or_insert(nb);
        split.push((ke, a, b, amp));
    }
    let (da, db) = (ia.len(), ib.len());
    let mut groups: BTreeMap<Vec<u16>, Vec<(usize, usize, Complex64)>> = BTreeMap::new();
    for (ke, a, b, amp) in split {
        groups.entry(ke).or_default().push((a, b, amp));
    }
    // ρ^{T_B}[(a,b),(a',b')] = ρ[(a,b'),(a',b)]
    let mut pt = DMatrix::<Complex64>::zeros(da * db, da * db);
    for entries in groups.values() {
        for &(a, b2, x) in entries {
            for &(a2, b, y) in entries {
                pt[(a * db + b, a2 * db + b2)] += x * y.conj();
            }
        }
    }
    let eigs = hermitian_eigenvalues(&pt);
    Ok(eigs.into_iter().filter(|&l| l < -CLIP).map(|l| -l).sum())
}
