use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BasisConfig, DensityMatrix, StateError, SubsystemSpec};

/// Amplitudes with modulus below this are dropped from the sparse map.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Tolerance on Σ|amp|² = 1 and on unitarity checks.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Basis indices, one per registry entry, in registry order.
pub(crate) type Config = Vec<u16>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum NormTag {
    Normalized,
    /// Renormalized after a projection that succeeded with `probability`.
    PostSelected { probability: f64 },
    /// Norm is whatever the amplitudes say.
    Raw,
}

/// Result of a projective measurement on a named outcome.
#[derive(Debug, Clone)]
pub enum Projection {
    Outcome { probability: f64, state: KetState },
    /// The outcome has zero weight. Outcome enumeration hits this routinely.
    Impossible,
}

impl Projection {
    pub fn probability(&self) -> f64 {
        match self {
            Projection::Outcome { probability, .. } => *probability,
            Projection::Impossible => 0.0,
        }
    }

    pub fn into_state(self) -> Option<KetState> {
        match self {
            Projection::Outcome { state, .. } => Some(state),
            Projection::Impossible => None,
        }
    }
}

/// Borrowed view of one basis configuration.
#[derive(Clone, Copy)]
pub struct ConfigRef<'a> {
    registry: &'a [SubsystemSpec],
    indices: &'a [u16],
}

impl<'a> ConfigRef<'a> {
    pub fn label(&self, id: &str) -> Option<&'a str> {
        let pos = self.registry.iter().position(|s| s.id() == id)?;
        Some(self.registry[pos].label(self.indices[pos] as usize))
    }

    pub fn label_at(&self, pos: usize) -> &'a str {
        self.registry[pos].label(self.indices[pos] as usize)
    }

    pub fn index_at(&self, pos: usize) -> usize {
        self.indices[pos] as usize
    }

    pub fn labels(&self) -> Vec<&'a str> {
        (0..self.indices.len()).map(|p| self.label_at(p)).collect()
    }

    pub fn to_basis_config(&self) -> BasisConfig {
        BasisConfig::from_pairs(
            self.registry
                .iter()
                .zip(self.indices)
                .map(|(s, &i)| (s.id(), s.label(i as usize))),
        )
    }
}

/// Sparse ket over a registry of labelled subsystems.
///
/// Values are immutable: every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    registry: Vec<SubsystemSpec>,
    amplitudes: BTreeMap<Config, Complex64>,
    norm_tag: NormTag,
}

fn check_registry(registry: &[SubsystemSpec]) -> Result<(), StateError> {
    let mut seen = HashSet::new();
    for s in registry {
        if !seen.insert(s.id()) {
            return Err(StateError::DuplicateId(s.id().to_string()));
        }
    }
    Ok(())
}

fn tag_for(norm_sqr: f64) -> NormTag {
    if (norm_sqr - 1.0).abs() < NORM_TOLERANCE {
        NormTag::Normalized
    } else {
        NormTag::Raw
    }
}

fn prune(map: &mut BTreeMap<Config, Complex64>) {
    map.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
}

/// `max |U†U - I|` entry.
pub(crate) fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let prod = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

impl KetState {
    /// Build a state from explicit terms. Duplicate configurations add up.
    pub fn new(
        registry: Vec<SubsystemSpec>,
        terms: Vec<(BasisConfig, Complex64)>,
        normalize: bool,
    ) -> Result<Self, StateError> {
        check_registry(&registry)?;
        if terms.is_empty() {
            return Err(StateError::EmptyTerms);
        }
        let mut amplitudes: BTreeMap<Config, Complex64> = BTreeMap::new();
        for (cfg, amp) in terms {
            let key = resolve_config(&registry, &cfg)?;
            *amplitudes.entry(key).or_default() += amp;
        }
        prune(&mut amplitudes);
        if amplitudes.is_empty() {
            return Err(StateError::ZeroState);
        }
        let mut state = Self {
            registry,
            amplitudes,
            norm_tag: NormTag::Raw,
        };
        if normalize {
            state = state.normalized()?;
        } else {
            state.norm_tag = tag_for(state.norm_sqr());
        }
        Ok(state)
    }

    /// A single basis ket with amplitude 1.
    pub fn basis(registry: Vec<SubsystemSpec>, config: BasisConfig) -> Result<Self, StateError> {
        Self::new(registry, vec![(config, Complex64::new(1.0, 0.0))], false)
    }

    pub(crate) fn from_parts(
        registry: Vec<SubsystemSpec>,
        mut amplitudes: BTreeMap<Config, Complex64>,
        norm_tag: NormTag,
    ) -> Result<Self, StateError> {
        check_registry(&registry)?;
        prune(&mut amplitudes);
        Ok(Self {
            registry,
            amplitudes,
            norm_tag,
        })
    }

    pub fn registry(&self) -> &[SubsystemSpec] {
        &self.registry
    }

    pub fn ids(&self) -> Vec<&str> {
        self.registry.iter().map(|s| s.id()).collect()
    }

    pub fn has_subsystem(&self, id: &str) -> bool {
        self.registry.iter().any(|s| s.id() == id)
    }

    pub fn subsystem(&self, id: &str) -> Result<&SubsystemSpec, StateError> {
        Ok(&self.registry[self.position(id)?])
    }

    pub fn position(&self, id: &str) -> Result<usize, StateError> {
        self.registry
            .iter()
            .position(|s| s.id() == id)
            .ok_or_else(|| StateError::UnknownSubsystem(id.to_string()))
    }

    /// Number of stored (non-pruned) amplitudes.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    /// True only for the explicit zero vector.
    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOLERANCE
    }

    pub fn amplitude(&self, config: &BasisConfig) -> Result<Complex64, StateError> {
        let key = resolve_config(&self.registry, config)?;
        Ok(self.amplitudes.get(&key).copied().unwrap_or_default())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConfigRef<'_>, Complex64)> {
        self.amplitudes.iter().map(move |(k, a)| {
            (
                ConfigRef {
                    registry: &self.registry,
                    indices: k,
                },
                *a,
            )
        })
    }

    pub(crate) fn raw_amplitudes(&self) -> &BTreeMap<Config, Complex64> {
        &self.amplitudes
    }

    /// Entries sorted lexicographically by their label strings.
    pub fn sorted_entries(&self) -> Vec<(Vec<&str>, Complex64)> {
        let mut out: Vec<_> = self
            .iter()
            .map(|(c, a)| (c.labels(), a))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn normalized(&self) -> Result<Self, StateError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(StateError::ZeroState);
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(k, a)| (k.clone(), a / n))
            .collect();
        let norm_tag = match self.norm_tag {
            NormTag::PostSelected { probability } => NormTag::PostSelected { probability },
            _ => NormTag::Normalized,
        };
        Ok(Self {
            registry: self.registry.clone(),
            amplitudes,
            norm_tag,
        })
    }

    /// Multiply every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut amplitudes: BTreeMap<_, _> = self
            .amplitudes
            .iter()
            .map(|(k, a)| (k.clone(), a * factor))
            .collect();
        prune(&mut amplitudes);
        let norm_sqr: f64 = amplitudes.values().map(|a: &Complex64| a.norm_sqr()).sum();
        Self {
            registry: self.registry.clone(),
            amplitudes,
            norm_tag: if factor.norm() == 1.0 {
                self.norm_tag
            } else {
                tag_for(norm_sqr)
            },
        }
    }

    /// Rotate the global phase so the first amplitude in lexicographic label
    /// order is real and positive.
    pub fn canonical_phase(&self) -> Self {
        match self.sorted_entries().first() {
            Some((_, a)) if a.norm() > 0.0 => {
                let phase = a.conj() / a.norm();
                self.scaled(phase)
            }
            _ => self.clone(),
        }
    }

    pub fn with_norm_tag(mut self, tag: NormTag) -> Self {
        self.norm_tag = tag;
        self
    }

    /// Rename subsystems; ids not in `map` are kept.
    pub fn relabeled(&self, map: &[(&str, &str)]) -> Result<Self, StateError> {
        let registry: Vec<_> = self
            .registry
            .iter()
            .map(|s| match map.iter().find(|(old, _)| *old == s.id()) {
                Some((_, new)) => s.with_id(*new),
                None => s.clone(),
            })
            .collect();
        check_registry(&registry)?;
        Ok(Self {
            registry,
            amplitudes: self.amplitudes.clone(),
            norm_tag: self.norm_tag,
        })
    }

    /// Same state with the registry permuted into `order`.
    pub fn reordered(&self, order: &[&str]) -> Result<Self, StateError> {
        if order.len() != self.registry.len() {
            return Err(StateError::RegistryMismatch(format!(
                "order lists {} ids, registry has {}",
                order.len(),
                self.registry.len()
            )));
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|id| self.position(id))
            .collect::<Result<_, _>>()?;
        let registry = perm.iter().map(|&p| self.registry[p].clone()).collect();
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(k, a)| (perm.iter().map(|&p| k[p]).collect(), *a))
            .collect();
        Self::from_parts(registry, amplitudes, self.norm_tag)
    }

    /// Product state. Ids must be disjoint.
    pub fn tensor(&self, other: &KetState) -> Result<Self, StateError> {
        for s in &other.registry {
            if self.has_subsystem(s.id()) {
                return Err(StateError::DuplicateId(s.id().to_string()));
            }
        }
        let registry: Vec<_> = self
            .registry
            .iter()
            .chain(other.registry.iter())
            .cloned()
            .collect();
        let mut amplitudes = BTreeMap::new();
        for (ka, a) in &self.amplitudes {
            for (kb, b) in &other.amplitudes {
                let mut k = ka.clone();
                k.extend_from_slice(kb);
                amplitudes.insert(k, a * b);
            }
        }
        let mut out = Self::from_parts(registry, amplitudes, NormTag::Raw)?;
        out.norm_tag = tag_for(out.norm_sqr());
        Ok(out)
    }

    /// Apply a unitary acting on `targets`. Row/column index runs over the
    /// target configurations with the first target most significant.
    pub fn apply_local_unitary(
        &self,
        targets: &[&str],
        u: &DMatrix<Complex64>,
    ) -> Result<Self, StateError> {
        let defect = unitarity_defect(u);
        if !(defect < NORM_TOLERANCE) {
            return Err(StateError::NotUnitary(defect));
        }
        self.apply_local_map(targets, u, self.norm_tag)
    }

    /// Apply an arbitrary (e.g. projector) matrix on `targets`, no unitarity check.
    pub fn apply_local_operator(
        &self,
        targets: &[&str],
        op: &DMatrix<Complex64>,
    ) -> Result<Self, StateError> {
        let mut out = self.apply_local_map(targets, op, NormTag::Raw)?;
        out.norm_tag = tag_for(out.norm_sqr());
        Ok(out)
    }

    fn apply_local_map(
        &self,
        targets: &[&str],
        op: &DMatrix<Complex64>,
        norm_tag: NormTag,
    ) -> Result<Self, StateError> {
        let positions: Vec<usize> = targets
            .iter()
            .map(|id| self.position(id))
            .collect::<Result<_, _>>()?;
        let mut seen = HashSet::new();
        for id in targets {
            if !seen.insert(*id) {
                return Err(StateError::DuplicateId(id.to_string()));
            }
        }
        let dims: Vec<usize> = positions.iter().map(|&p| self.registry[p].dim()).collect();
        let total: usize = dims.iter().product();
        if op.nrows() != total || op.ncols() != total {
            return Err(StateError::DimensionMismatch {
                expected: total,
                got: op.nrows().max(op.ncols()),
            });
        }
        let mut out: BTreeMap<Config, Complex64> = BTreeMap::new();
        for (key, amp) in &self.amplitudes {
            let mut col = 0usize;
            for (&p, &d) in positions.iter().zip(&dims) {
                col = col * d + key[p] as usize;
            }
            for row in 0..total {
                let coef = op[(row, col)];
                if coef.re == 0.0 && coef.im == 0.0 {
                    continue;
                }
                let mut k = key.clone();
                let mut rem = row;
                for (&p, &d) in positions.iter().zip(&dims).rev() {
                    k[p] = (rem % d) as u16;
                    rem /= d;
                }
                *out.entry(k).or_default() += coef * amp;
            }
        }
        Self::from_parts(self.registry.clone(), out, norm_tag)
    }

    /// Apply a per-configuration linear map `f(config) -> [(config', coef)]`.
    ///
    /// Used by transformations that change the registry (mode removal).
    pub(crate) fn map_configs<F>(
        &self,
        registry: Vec<SubsystemSpec>,
        norm_tag: NormTag,
        mut f: F,
    ) -> Result<Self, StateError>
    where
        F: FnMut(&[u16]) -> Result<Vec<(Config, Complex64)>, StateError>,
    {
        let mut out: BTreeMap<Config, Complex64> = BTreeMap::new();
        for (key, amp) in &self.amplitudes {
            for (k, coef) in f(key)? {
                *out.entry(k).or_default() += coef * amp;
            }
        }
        Self::from_parts(registry, out, norm_tag)
    }

    /// Project on a partial assignment and renormalize.
    pub fn project_and_collapse(&self, assignment: &BasisConfig) -> Result<Projection, StateError> {
        let mut wanted = Vec::with_capacity(assignment.len());
        for (id, label) in assignment.iter() {
            let pos = self.position(id)?;
            let idx = self.registry[pos]
                .index_of(label)
                .ok_or_else(|| StateError::UnknownLabel {
                    id: id.to_string(),
                    label: label.to_string(),
                })?;
            wanted.push((pos, idx as u16));
        }
        self.project_where(|c| wanted.iter().all(|&(p, i)| c.index_at(p) == i as usize))
    }

    /// Project onto the span of configurations satisfying `keep`.
    pub fn project_where<F>(&self, keep: F) -> Result<Projection, StateError>
    where
        F: Fn(ConfigRef<'_>) -> bool,
    {
        let total = self.norm_sqr();
        if total == 0.0 {
            return Err(StateError::ZeroState);
        }
        let kept: BTreeMap<Config, Complex64> = self
            .amplitudes
            .iter()
            .filter(|(k, _)| {
                keep(ConfigRef {
                    registry: &self.registry,
                    indices: k,
                })
            })
            .map(|(k, a)| (k.clone(), *a))
            .collect();
        let weight: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        if kept.is_empty() || weight <= 0.0 {
            return Ok(Projection::Impossible);
        }
        let probability = weight / total;
        let scale = 1.0 / weight.sqrt();
        let amplitudes = kept.into_iter().map(|(k, a)| (k, a * scale)).collect();
        Ok(Projection::Outcome {
            probability,
            state: Self::from_parts(
                self.registry.clone(),
                amplitudes,
                NormTag::PostSelected { probability },
            )?,
        })
    }

    /// Reduced density matrix of a single subsystem, normalized to trace 1.
    fn single_reduced(&self, pos: usize) -> DMatrix<Complex64> {
        let d = self.registry[pos].dim();
        let mut groups: BTreeMap<Config, Vec<Complex64>> = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            let mut rest = k.clone();
            rest.remove(pos);
            groups.entry(rest).or_insert_with(|| vec![Complex64::default(); d])[k[pos] as usize] =
                *a;
        }
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for v in groups.values() {
            for i in 0..d {
                for j in 0..d {
                    rho[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        let tr: f64 = (0..d).map(|i| rho[(i, i)].re).sum();
        if tr > 0.0 {
            rho /= Complex64::new(tr, 0.0);
        }
        rho
    }

    /// Purity `tr ρ²` of one subsystem's reduced state.
    pub fn subsystem_purity(&self, id: &str) -> Result<f64, StateError> {
        let rho = self.single_reduced(self.position(id)?);
        Ok((&rho * &rho).trace().re)
    }

    /// Remove a subsystem that is in a product state with the rest.
    pub fn drop_product_subsystem(&self, id: &str) -> Result<Self, StateError> {
        let pos = self.position(id)?;
        if self.amplitudes.is_empty() {
            return Err(StateError::ZeroState);
        }
        let purity = self.subsystem_purity(id)?;
        if purity < 1.0 - NORM_TOLERANCE {
            return Err(StateError::NotProduct {
                id: id.to_string(),
                purity,
            });
        }
        let d = self.registry[pos].dim();
        let mut weights = vec![0.0f64; d];
        for (k, a) in &self.amplitudes {
            weights[k[pos] as usize] += a.norm_sqr();
        }
        let (best, w) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, w)| (i as u16, *w))
            .expect("dim >= 2");
        let scale = self.norm() / w.sqrt();
        let mut registry = self.registry.clone();
        registry.remove(pos);
        let amplitudes = self
            .amplitudes
            .iter()
            .filter(|(k, _)| k[pos] == best)
            .map(|(k, a)| {
                let mut rest = k.clone();
                rest.remove(pos);
                (rest, a * scale)
            })
            .collect();
        Self::from_parts(registry, amplitudes, self.norm_tag)
    }

    /// Reduced density matrix on the complement of `drop`.
    pub fn trace_out(&self, drop: &[&str]) -> Result<DensityMatrix, StateError> {
        if drop.is_empty() {
            return Err(StateError::InvalidArgument("trace_out needs at least one id".into()));
        }
        let mut drop_pos = Vec::new();
        for id in drop {
            let p = self.position(id)?;
            if drop_pos.contains(&p) {
                return Err(StateError::DuplicateId(id.to_string()));
            }
            drop_pos.push(p);
        }
        let keep_pos: Vec<usize> = (0..self.registry.len())
            .filter(|p| !drop_pos.contains(p))
            .collect();
        Ok(self.reduced_on_positions(&keep_pos))
    }

    /// Reduced density matrix keeping exactly `keep` (in registry order).
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityMatrix, StateError> {
        let mut keep_pos = Vec::new();
        for id in keep {
            let p = self.position(id)?;
            if keep_pos.contains(&p) {
                return Err(StateError::DuplicateId(id.to_string()));
            }
            keep_pos.push(p);
        }
        keep_pos.sort_unstable();
        Ok(self.reduced_on_positions(&keep_pos))
    }

    fn reduced_on_positions(&self, keep_pos: &[usize]) -> DensityMatrix {
        let drop_pos: Vec<usize> = (0..self.registry.len())
            .filter(|p| !keep_pos.contains(p))
            .collect();
        let mut kept_index: BTreeMap<Config, usize> = BTreeMap::new();
        for k in self.amplitudes.keys() {
            let sub: Config = keep_pos.iter().map(|&p| k[p]).collect();
            kept_index.entry(sub).or_insert(0);
        }
        for (i, v) in kept_index.values_mut().enumerate() {
            *v = i;
        }
        let mut groups: BTreeMap<Config, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            let sub: Config = keep_pos.iter().map(|&p| k[p]).collect();
            let env: Config = drop_pos.iter().map(|&p| k[p]).collect();
            groups.entry(env).or_default().push((kept_index[&sub], *a));
        }
        let n = kept_index.len();
        let mut m = DMatrix::zeros(n, n);
        for entries in groups.values() {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    m[(i, j)] += a * b.conj();
                }
            }
        }
        DensityMatrix::new(
            keep_pos.iter().map(|&p| self.registry[p].clone()).collect(),
            kept_index.into_keys().collect(),
            m,
        )
    }

    /// `⟨self|other⟩`. Registries must hold the same ids and bases; order may differ.
    pub fn inner(&self, other: &KetState) -> Result<Complex64, StateError> {
        let other = self.aligned(other)?;
        let mut acc = Complex64::default();
        for (k, a) in &self.amplitudes {
            if let Some(b) = other.amplitudes.get(k) {
                acc += a.conj() * b;
            }
        }
        Ok(acc)
    }

    /// `other` re-expressed in this state's registry order.
    pub fn aligned(&self, other: &KetState) -> Result<KetState, StateError> {
        if self.registry.len() != other.registry.len() {
            return Err(StateError::RegistryMismatch(format!(
                "{:?} vs {:?}",
                self.ids(),
                other.ids()
            )));
        }
        let reordered = other
            .reordered(&self.ids())
            .map_err(|_| StateError::RegistryMismatch(format!("{:?} vs {:?}", self.ids(), other.ids())))?;
        for (a, b) in self.registry.iter().zip(&reordered.registry) {
            if a.basis() != b.basis() {
                return Err(StateError::RegistryMismatch(format!(
                    "basis of {} differs",
                    a.id()
                )));
            }
        }
        Ok(reordered)
    }
}

pub(crate) fn resolve_config(
    registry: &[SubsystemSpec],
    config: &BasisConfig,
) -> Result<Config, StateError> {
    for (id, _) in config.iter() {
        if !registry.iter().any(|s| s.id() == id) {
            return Err(StateError::UnknownSubsystem(id.to_string()));
        }
    }
    if config.len() != registry.len() {
        return Err(StateError::IncompleteConfig(format!(
            "config assigns {} of {} subsystems",
            config.len(),
            registry.len()
        )));
    }
    let mut key = Vec::with_capacity(registry.len());
    for spec in registry {
        let label = config
            .get(spec.id())
            .ok_or_else(|| StateError::IncompleteConfig(format!("missing {}", spec.id())))?;
        let idx = spec.index_of(label).ok_or_else(|| StateError::UnknownLabel {
            id: spec.id().to_string(),
            label: label.to_string(),
        })?;
        key.push(idx as u16);
    }
    Ok(key)
}
