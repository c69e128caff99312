//! Dense Hermitian operators and their spectral decomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance: `max|A - A†| <= HERMITIAN_TOL * max|A|`.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    EnergyKelvin,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
    unit: Unit,
}

impl HermitianOperator {
    pub fn new(matrix: DMatrix<Complex64>, unit: Unit) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let defect = hermiticity_defect(&matrix);
        let scale = max_abs(&matrix);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { matrix, unit })
    }

    /// Wraps a matrix that is Hermitian by construction.
    pub(crate) fn from_hermitian(matrix: DMatrix<Complex64>, unit: Unit) -> Self {
        debug_assert!(hermiticity_defect(&matrix) <= HERMITIAN_TOL * max_abs(&matrix).max(1.0));
        Self { matrix, unit }
    }

    pub fn from_real_diagonal(diag: &[f64], unit: Unit) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self { matrix: DMatrix::from_diagonal(&d), unit }
    }

    pub fn identity(dim: usize, unit: Unit) -> Self {
        Self { matrix: DMatrix::identity(dim, dim), unit }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest entry magnitude of the commutator `[self, other]`.
    pub fn commutator_norm(&self, other: &HermitianOperator) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        max_abs(&(ab - ba))
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut defect = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(lambda);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `max|V†V - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        max_abs(&(g - DMatrix::<Complex64>::identity(n, n)))
    }

    /// Distinct eigenvalues (clustered within `tol`) and their multiplicities.
    pub fn distinct_levels(&self, tol: f64) -> Vec<(f64, usize)> {
        let mut levels: Vec<(f64, usize)> = Vec::new();
        for &e in &self.eigenvalues {
            match levels.last_mut() {
                Some((first, count)) if (e - *first).abs() <= tol => *count += 1,
                _ => levels.push((e, 1)),
            }
        }
        levels
    }
}

const EIGEN_MAX_ITERATIONS: usize = 100_000;

/// Dense Hermitian eigendecomposition. Real input takes the real symmetric path.
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let defect = hermiticity_defect(&h.matrix);
    if defect > HERMITIAN_TOL * max_abs(&h.matrix) {
        return Err(Error::NotHermitian { defect });
    }
    let n = h.dim();
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if h.is_real() {
        let real = h.matrix.map(|z| z.re);
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, EIGEN_MAX_ITERATIONS).ok_or(Error::NoConvergence)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::try_new(h.matrix.clone(), f64::EPSILON, EIGEN_MAX_ITERATIONS)
            .ok_or(Error::NoConvergence)?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues only.
pub fn eigenvalues(h: &HermitianOperator) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = if h.is_real() {
        h.matrix.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.matrix.symmetric_eigenvalues().iter().copied().collect()
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence);
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let d = diagonalize(&HermitianOperator::identity(216, Unit::Dimensionless)).unwrap();
        assert!(d.eigenvalues().iter().all(|&x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diagonal_is_sorted_ascending() {
        let h = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0], Unit::EnergyKelvin);
        let d = diagonalize(&h).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 2.0, 3.0]);
        assert!(d.unitarity_defect() < 1e-14);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.0, 1.0),
                c(1.0, -0.5),
                c(0.0, -1.0),
                c(-1.0, 0.0),
                c(0.3, 0.0),
                c(1.0, 0.5),
                c(0.3, 0.0),
                c(0.5, 0.0),
            ],
        );
        let h = HermitianOperator::new(m.clone(), Unit::Dimensionless).unwrap();
        assert!(!h.is_real());
        let d = diagonalize(&h).unwrap();
        assert!(max_abs(&(d.reconstruct() - m)) < 1e-12);
        assert!(d.unitarity_defect() < 1e-12);
        let ev = eigenvalues(&h).unwrap();
        for (a, b) in ev.iter().zip(d.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m, Unit::Dimensionless), Err(Error::NotHermitian { .. })));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(matches!(HermitianOperator::new(rect, Unit::Dimensionless), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn distinct_levels_cluster() {
        let h = HermitianOperator::from_real_diagonal(&[1.0, 1.0 + 1e-12, 2.0, 5.0, 5.0], Unit::EnergyKelvin);
        let d = diagonalize(&h).unwrap();
        assert_eq!(d.distinct_levels(1e-9).iter().map(|l| l.1).collect::<Vec<_>>(), vec![2, 1, 2]);
    }
}
