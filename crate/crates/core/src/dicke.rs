//! Dicke states of the three spin-5/2 sites and closed-system dynamics under
//! a local transverse field.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::operator::{diagonalize, HermitianOperator, SpectralDecomposition};
use crate::spin::{build_hamiltonian_local_x, site_level, site_m_values, ModelParameters, SpinQuantum, SITES};
use crate::units::theta_to_ps;

const NORM_TOL: f64 = 1e-10;

/// Normalized state in the 216-dimensional product space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes))
    }

    /// Rescales to unit norm.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes.unscale(norm)))
    }

    pub(crate) fn from_normalized(amplitudes: DVector<Complex64>) -> Self {
        Self(amplitudes)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        Ok(self.0.dotc(&(op.matrix() * &self.0)).re)
    }

    /// `⟨S_site^z⟩` using the diagonal basis representation.
    pub fn site_sz(&self, site: usize) -> f64 {
        let m = site_m_values(site, SpinQuantum::FE3);
        self.0.iter().zip(&m).map(|(a, m)| a.norm_sqr() * m).sum()
    }

    /// Relabels sites: the content of site `k` moves to site `perm[k-1]`.
    pub fn permute_sites(&self, perm: [usize; SITES]) -> StateVector {
        let d = SpinQuantum::FE3.local_dim();
        let mut out = DVector::zeros(self.dim());
        for (i, a) in self.0.iter().enumerate() {
            let mut levels = [0usize; SITES];
            for site in 1..=SITES {
                levels[perm[site - 1] - 1] = site_level(i, site, d);
            }
            let j = levels.iter().fold(0, |acc, &l| acc * d + l);
            out[j] = *a;
        }
        StateVector(out)
    }
}

/// Number of collective excitations above `|-5/2,-5/2,-5/2⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DickeIndex(u32);

impl DickeIndex {
    pub const MAX: u32 = 15;

    pub fn new(k: u32) -> Result<Self> {
        if k > Self::MAX {
            return Err(Error::InvalidDickeIndex(k));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = DickeIndex> {
        (0..=Self::MAX).map(DickeIndex)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Normalization `a_k = 1 / (k! sqrt(C(15, k)))`.
pub fn dicke_normalization(k: DickeIndex) -> f64 {
    1.0 / (factorial(k.0) * binomial(DickeIndex::MAX, k.0).sqrt())
}

/// `J+ v` applied entry by entry.
fn apply_total_raising(v: &DVector<Complex64>, spin: SpinQuantum) -> DVector<Complex64> {
    let d = spin.local_dim();
    let s = spin.spin();
    let mut out = DVector::zeros(v.len());
    for (i, a) in v.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        for site in 1..=SITES {
            let level = site_level(i, site, d);
            if level == 0 {
                continue;
            }
            let m = spin.m_of_level(level);
            let coeff = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            let stride = d.pow((SITES - site) as u32);
            out[i - stride] += a * coeff;
        }
    }
    out
}

/// `|D_k⟩ = a_k (J+)^k |-5/2,-5/2,-5/2⟩`.
pub fn dicke_state(k: DickeIndex) -> Result<StateVector> {
    let spin = SpinQuantum::FE3;
    let dim = spin.cluster_dim();
    let mut v = StateVector::basis(dim, dim - 1).0;
    for _ in 0..k.0 {
        v = apply_total_raising(&v, spin);
    }
    let a_k = dicke_normalization(k);
    let computed = v.norm();
    if (computed * a_k - 1.0).abs() > NORM_TOL {
        return Err(Error::NormalizationMismatch { expected: 1.0 / a_k, computed });
    }
    StateVector::normalized(v.scale(a_k))
}

/// `V exp(-i diag(λ) θ) V† v`, with `λ` in Kelvin and `θ` in units of ħ/k_B per Kelvin.
pub fn evolve(v: &StateVector, d: &SpectralDecomposition, theta: f64) -> Result<StateVector> {
    if v.dim() != d.dim() {
        return Err(Error::DimensionMismatch { expected: d.dim(), found: v.dim() });
    }
    let vecs = d.eigenvectors();
    let mut c = vecs.ad_mul(&v.0);
    for (ck, &lambda) in c.iter_mut().zip(d.eigenvalues()) {
        *ck *= Complex64::from_polar(1.0, -lambda * theta);
    }
    Ok(StateVector(vecs * c))
}

/// Dense propagator `exp(-i H θ)` for repeated application at a fixed step.
#[derive(Debug, Clone)]
pub struct Propagator {
    theta: f64,
    matrix: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(d: &SpectralDecomposition, theta: f64) -> Self {
        let vecs = d.eigenvectors();
        let mut scaled = vecs.clone();
        for (k, &lambda) in d.eigenvalues().iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -lambda * theta);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= phase;
            }
        }
        Self { theta, matrix: scaled * vecs.adjoint() }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `U v`, skipping zero amplitudes (post-measurement states are sparse).
    pub fn apply(&self, v: &StateVector) -> StateVector {
        let n = self.matrix.nrows();
        let mut out = DVector::<Complex64>::zeros(n);
        for (j, a) in v.0.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            out.axpy(*a, &self.matrix.column(j), Complex64::new(1.0, 0.0));
        }
        StateVector(out)
    }
}

/// Local magnetizations along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub dicke_k: u32,
    pub b_x: f64,
    /// Dimensionless time θ.
    pub theta: Vec<f64>,
    /// Physical time, picoseconds.
    pub t_ps: Vec<f64>,
    pub sz1: Vec<f64>,
    pub sz2: Vec<f64>,
    pub sz3: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Sensor–readout (site 1 vs site 3) Pearson correlation.
    pub fn sensor_readout_correlation(&self) -> f64 {
        pearson(&self.sz1, &self.sz3)
    }
}

pub const DEFAULT_TIME_SAMPLES: usize = 2000;
pub const DEFAULT_PERIODS: f64 = 10.0;

/// θ window spanning [`DEFAULT_PERIODS`] precession periods at 1 T.
///
/// A field on one site acts on the fully symmetric multiplet with a third
/// of its strength, so the precession frequency is `g μ_B B / 3`.
pub fn default_time_window(p: &ModelParameters) -> f64 {
    let omega = p.zeeman_kelvin_per_tesla() * 1.0 / 3.0;
    DEFAULT_PERIODS * 2.0 * PI / omega
}

/// [`DEFAULT_TIME_SAMPLES`] uniform samples over `[0, default_time_window]`.
pub fn default_time_grid(p: &ModelParameters) -> Vec<f64> {
    linspace(0.0, default_time_window(p), DEFAULT_TIME_SAMPLES)
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Samples `⟨S_1^z⟩, ⟨S_2^z⟩, ⟨S_3^z⟩` of `|D_k⟩` evolving under the local-field Hamiltonian.
pub fn magnetization_trace(k: DickeIndex, p: &ModelParameters, t_grid: &[f64]) -> Result<TrajectoryRecord> {
    if p.b_z != 0.0 {
        return Err(Error::InvalidParameter("dynamics requires B_z = 0".into()));
    }
    let d = diagonalize(&build_hamiltonian_local_x(p)?)?;
    trace_with(k, p.b_x, &d, t_grid)
}

fn trace_with(k: DickeIndex, b_x: f64, d: &SpectralDecomposition, t_grid: &[f64]) -> Result<TrajectoryRecord> {
    let spin = SpinQuantum::FE3;
    let m: Vec<Vec<f64>> = (1..=SITES).map(|s| site_m_values(s, spin)).collect();
    let psi0 = dicke_state(k)?;
    let vecs = d.eigenvectors();
    let c = vecs.ad_mul(&psi0.0);
    let mut rec = TrajectoryRecord {
        dicke_k: k.0,
        b_x,
        theta: t_grid.to_vec(),
        t_ps: t_grid.iter().map(|&t| theta_to_ps(t)).collect(),
        sz1: Vec::with_capacity(t_grid.len()),
        sz2: Vec::with_capacity(t_grid.len()),
        sz3: Vec::with_capacity(t_grid.len()),
    };
    let mut phased = c.clone();
    for &theta in t_grid {
        for ((pk, ck), &lambda) in phased.iter_mut().zip(c.iter()).zip(d.eigenvalues()) {
            *pk = ck * Complex64::from_polar(1.0, -lambda * theta);
        }
        let psi = vecs * &phased;
        let expect = |site: usize| -> f64 { psi.iter().zip(&m[site]).map(|(a, m)| a.norm_sqr() * m).sum() };
        rec.sz1.push(expect(0));
        rec.sz2.push(expect(1));
        rec.sz3.push(expect(2));
    }
    Ok(rec)
}

/// Traces for several `(k, B_x)` configurations; one diagonalization per field.
pub fn magnetization_traces(
    configs: &[(DickeIndex, f64)],
    p: &ModelParameters,
    t_grid: &[f64],
    exec: Execution,
) -> Result<Vec<TrajectoryRecord>> {
    exec.map(configs, |&(k, b_x)| magnetization_trace(k, &p.with_b_x(b_x), t_grid)).into_iter().collect()
}

/// Pearson correlation coefficient; 0 when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let mean = |x: &[f64]| x[..n].iter().sum::<f64>() / n as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}
