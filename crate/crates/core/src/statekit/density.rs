use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Config, SubsystemSpec};

/// Reduced state over the kept subsystems.
///
/// Rows and columns run over the kept configurations that actually occur in
/// the source state's support, not the full product basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    kept: Vec<SubsystemSpec>,
    configs: Vec<Config>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub(crate) fn new(kept: Vec<SubsystemSpec>, configs: Vec<Config>, matrix: DMatrix<Complex64>) -> Self {
        Self { kept, configs, matrix }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.kept.iter().map(|s| s.id()).collect()
    }

    pub fn kept(&self) -> &[SubsystemSpec] {
        &self.kept
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Labels of the `i`-th row configuration, in kept order.
    pub fn config_labels(&self, i: usize) -> Vec<&str> {
        self.kept
            .iter()
            .zip(&self.configs[i])
            .map(|(s, &k)| s.label(k as usize))
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// Ascending eigenvalues of a Hermitian matrix (symmetrized first).
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
