use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomIds, DynamicsError, InternalLevel, Result};
use crate::statekit::{momentum_label, BasisConfig, KetState, SubsystemKind, SubsystemSpec};

/// Which closed three-array family the ladder tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Arrays `C_g0`, `C_g1`, `C_e0`.
    GroundInitial,
    /// Arrays `C_e1`, `C_e0`, `C_g1`.
    ExcitedInitial,
}

/// Role of an array inside a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderArray {
    /// Not coupled to the field; only picks up kinetic phase.
    Spectator,
    /// Coupled to the intermediate array and carrying the Bragg transfer.
    Bright,
    /// Detuned by Δ.
    Intermediate,
}

impl Branch {
    /// (internal level, photon number) of an array.
    pub fn sector(self, array: LadderArray) -> (InternalLevel, usize) {
        use InternalLevel::*;
        match (self, array) {
            (Branch::GroundInitial, LadderArray::Spectator) => (G, 0),
            (Branch::GroundInitial, LadderArray::Bright) => (G, 1),
            (Branch::GroundInitial, LadderArray::Intermediate) => (E, 0),
            (Branch::ExcitedInitial, LadderArray::Spectator) => (E, 1),
            (Branch::ExcitedInitial, LadderArray::Bright) => (E, 0),
            (Branch::ExcitedInitial, LadderArray::Intermediate) => (G, 1),
        }
    }

    fn array_of(self, level: InternalLevel, n: usize) -> Option<LadderArray> {
        [LadderArray::Spectator, LadderArray::Bright, LadderArray::Intermediate]
            .into_iter()
            .find(|&a| self.sector(a) == (level, n))
    }
}

/// Truncated momentum-ladder amplitudes `C[l]` for `l ∈ [-l_max, l_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeLadder {
    branch: Branch,
    l_max: i32,
    spectator: Vec<Complex64>,
    bright: Vec<Complex64>,
    intermediate: Vec<Complex64>,
}

impl AmplitudeLadder {
    pub fn new(branch: Branch, l_max: i32) -> Result<Self> {
        if l_max < 3 {
            return Err(DynamicsError::InvalidArgument(format!(
                "l_max must be at least 3, got {l_max}"
            )));
        }
        let n = (2 * l_max + 1) as usize;
        Ok(Self {
            branch,
            l_max,
            spectator: vec![Complex64::default(); n],
            bright: vec![Complex64::default(); n],
            intermediate: vec![Complex64::default(); n],
        })
    }

    /// Ground branch with `C_g0[0] = C_g1[0] = 1/√2`.
    pub fn ground_superposition(l_max: i32) -> Result<Self> {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut x = Self::new(Branch::GroundInitial, l_max)?;
        x.set(LadderArray::Spectator, 0, a)?;
        x.set(LadderArray::Bright, 0, a)?;
        Ok(x)
    }

    /// Excited branch with `C_e1[-2] = C_e0[-2] = 1/√2`.
    pub fn excited_superposition(l_max: i32) -> Result<Self> {
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut x = Self::new(Branch::ExcitedInitial, l_max)?;
        x.set(LadderArray::Spectator, -2, a)?;
        x.set(LadderArray::Bright, -2, a)?;
        Ok(x)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn l_range(&self) -> std::ops::RangeInclusive<i32> {
        -self.l_max..=self.l_max
    }

    fn index(&self, l: i32) -> Option<usize> {
        (l.abs() <= self.l_max).then(|| (l + self.l_max) as usize)
    }

    pub fn array(&self, array: LadderArray) -> &[Complex64] {
        match array {
            LadderArray::Spectator => &self.spectator,
            LadderArray::Bright => &self.bright,
            LadderArray::Intermediate => &self.intermediate,
        }
    }

    pub(crate) fn array_mut(&mut self, array: LadderArray) -> &mut [Complex64] {
        match array {
            LadderArray::Spectator => &mut self.spectator,
            LadderArray::Bright => &mut self.bright,
            LadderArray::Intermediate => &mut self.intermediate,
        }
    }

    /// Amplitude at `l`; zero outside the range.
    pub fn get(&self, array: LadderArray, l: i32) -> Complex64 {
        self.index(l)
            .map(|i| self.array(array)[i])
            .unwrap_or_default()
    }

    pub fn set(&mut self, array: LadderArray, l: i32, value: Complex64) -> Result<()> {
        let i = self.index(l).ok_or_else(|| {
            DynamicsError::InvalidArgument(format!("l = {l} outside ±{}", self.l_max))
        })?;
        self.array_mut(array)[i] = value;
        Ok(())
    }

    /// Amplitude by (level, photon number) as in `C_{level,n}[l]`.
    pub fn amplitude(&self, level: InternalLevel, n: usize, l: i32) -> Complex64 {
        self.branch
            .array_of(level, n)
            .map(|a| self.get(a, l))
            .unwrap_or_default()
    }

    fn all(&self) -> impl Iterator<Item = &Complex64> {
        self.spectator
            .iter()
            .chain(&self.bright)
            .chain(&self.intermediate)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.all().map(|a| a.norm_sqr()).sum()
    }

    /// Total population at `|l| = l_max`.
    pub fn boundary_population(&self) -> f64 {
        let last = (2 * self.l_max) as usize;
        [&self.spectator, &self.bright, &self.intermediate]
            .iter()
            .map(|v| v[0].norm_sqr() + v[last].norm_sqr())
            .sum()
    }

    /// `⟨self|other⟩` over all three arrays.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.branch != other.branch || self.l_max != other.l_max {
            return Err(DynamicsError::InvalidArgument(
                "ladders differ in branch or range".into(),
            ));
        }
        Ok(self.all().zip(other.all()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `1 - |⟨self|other⟩|²`.
    pub fn infidelity(&self, other: &Self) -> Result<f64> {
        Ok(1.0 - self.inner(other)?.norm_sqr())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.all()
            .zip(other.all())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Copy onto a different range; fails if population would be cut off.
    pub fn resized(&self, l_max: i32) -> Result<Self> {
        let mut out = Self::new(self.branch, l_max)?;
        for array in [LadderArray::Spectator, LadderArray::Bright, LadderArray::Intermediate] {
            for l in self.l_range() {
                let a = self.get(array, l);
                if a == Complex64::default() {
                    continue;
                }
                out.set(array, l, a).map_err(|_| {
                    DynamicsError::InvalidArgument(format!(
                        "amplitude at l = {l} does not fit in ±{l_max}"
                    ))
                })?;
            }
        }
        Ok(out)
    }

    /// Momentum subsystem with every integer label in range.
    fn momentum_spec(&self, id: &str) -> Result<SubsystemSpec> {
        Ok(SubsystemSpec::new(
            id,
            SubsystemKind::AtomMomentum,
            self.l_range().map(momentum_label).collect(),
        )?)
    }

    /// Ket over `[atom.internal, atom.momentum, cavity]` with cavity cutoff 1.
    pub fn to_ket(&self, atom: &AtomIds, cavity: &str) -> Result<KetState> {
        let registry = vec![
            SubsystemSpec::atom_internal(atom.internal.clone()),
            self.momentum_spec(&atom.momentum)?,
            SubsystemSpec::cavity(cavity, 1)?,
        ];
        let mut terms = Vec::new();
        for array in [LadderArray::Spectator, LadderArray::Bright, LadderArray::Intermediate] {
            let (level, n) = self.branch.sector(array);
            for l in self.l_range() {
                let a = self.get(array, l);
                if a != Complex64::default() {
                    let cfg = BasisConfig::new()
                        .with(atom.internal.clone(), level.label())
                        .with(atom.momentum.clone(), momentum_label(l))
                        .with(cavity, n.to_string());
                    terms.push((cfg, a));
                }
            }
        }
        Ok(KetState::new(registry, terms, false)?)
    }

    /// Inverse of [`Self::to_ket`]; configurations outside the branch are errors.
    pub fn from_ket(
        state: &KetState,
        branch: Branch,
        l_max: i32,
        atom: &AtomIds,
        cavity: &str,
    ) -> Result<Self> {
        let mut out = Self::new(branch, l_max)?;
        for (cfg, amp) in state.iter() {
            let missing = |id: &str| DynamicsError::State(crate::statekit::StateError::UnknownSubsystem(id.into()));
            let level: InternalLevel = cfg
                .label(&atom.internal)
                .ok_or_else(|| missing(&atom.internal))?
                .parse()
                .map_err(DynamicsError::InvalidArgument)?;
            let mom = cfg.label(&atom.momentum).ok_or_else(|| missing(&atom.momentum))?;
            let l = crate::statekit::parse_momentum_label(mom).ok_or_else(|| {
                DynamicsError::InvalidArgument(format!("bad momentum label {mom:?}"))
            })?;
            let n: usize = cfg
                .label(cavity)
                .ok_or_else(|| missing(cavity))?
                .parse()
                .map_err(|_| DynamicsError::InvalidArgument("bad photon label".into()))?;
            let array = branch.array_of(level, n).ok_or_else(|| DynamicsError::UnsupportedSector {
                op: "ladder",
                detail: format!("({level}, n={n}) is outside the {branch:?} branch"),
            })?;
            out.set(array, l, amp)?;
        }
        Ok(out)
    }
}
