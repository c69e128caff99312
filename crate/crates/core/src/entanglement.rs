//! Thermal density matrices, partial trace and transpose, and negativity.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::operator::{diagonalize, eigenvalues, hermiticity_defect, HermitianOperator, SpectralDecomposition, Unit};
use crate::spin::{build_hamiltonian_z, ModelParameters};
use crate::thermo::{boltzmann_weights, check_field_grid, check_temperature};

/// Partial-transpose eigenvalues above `-NEGATIVITY_CUTOFF` count as nonnegative.
pub const NEGATIVITY_CUTOFF: f64 = 1e-12;
/// Negativity below this is treated as zero when locating thresholds.
pub const ZERO_NEGATIVITY: f64 = 1e-8;
/// Bisection resolution of the threshold temperature, Kelvin.
pub const THRESHOLD_RESOLUTION: f64 = 0.1;

const DENSITY_TOL: f64 = 1e-10;
// Boltzmann weights below this are dropped when assembling ρ; the trace
// changes by at most 216 times this.
const WEIGHT_FLOOR: f64 = 1e-20;

/// A density matrix over a list of sites (1-based) of common local dimension,
/// first listed site slowest-varying.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    local_dim: usize,
    sites: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to 1e-10).
    pub fn new(matrix: DMatrix<Complex64>, local_dim: usize, sites: Vec<usize>) -> Result<Self> {
        let rho = Self::from_parts(matrix, local_dim, sites)?;
        let defect = hermiticity_defect(&rho.matrix);
        if defect > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("Hermiticity defect {defect:e}")));
        }
        let tr = rho.matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = rho.min_eigenvalue()?;
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    fn from_parts(matrix: DMatrix<Complex64>, local_dim: usize, sites: Vec<usize>) -> Result<Self> {
        if local_dim < 2 || sites.is_empty() {
            return Err(Error::InvalidDensityMatrix("need local dimension ≥ 2 and at least one site".into()));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::InvalidDensityMatrix(format!("repeated site in {sites:?}")));
        }
        let dim = local_dim.pow(sites.len() as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: matrix.nrows() });
        }
        Ok(Self { matrix, local_dim, sites })
    }

    pub fn maximally_mixed(local_dim: usize, sites: Vec<usize>) -> Result<Self> {
        let dim = local_dim.pow(sites.len() as u32);
        let m = DMatrix::<Complex64>::identity(dim, dim).unscale(dim as f64);
        Self::from_parts(m, local_dim, sites)
    }

    /// `ρ_1 ⊗ ρ_2 ⊗ …` over consecutive sites starting at 1.
    pub fn product(factors: &[DMatrix<Complex64>]) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::InvalidDensityMatrix("empty product".into()))?;
        let d = first.nrows();
        let mut m = first.clone();
        for f in &factors[1..] {
            m = m.kronecker(f);
        }
        Self::new(m, d, (1..=factors.len()).collect())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ ρ) = Σ_ij |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn spectrum(&self) -> Result<Vec<f64>> {
        eigenvalues(&HermitianOperator::from_hermitian(self.matrix.clone(), Unit::Dimensionless))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectrum()?[0])
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> Result<usize> {
        Ok(self.spectrum()?.iter().filter(|&&x| x > cutoff).count())
    }

    fn position(&self, site: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    fn stride(&self, position: usize) -> usize {
        self.local_dim.pow((self.sites.len() - 1 - position) as u32)
    }
}

/// Gibbs state `Σ_i e^{-(E_i - E_min)/T} |i⟩⟨i| / Z` over sites 1, 2, 3.
pub fn thermal_state(d: &SpectralDecomposition, t: f64) -> Result<DensityMatrix> {
    check_temperature(t)?;
    let w = boltzmann_weights(d, t)?;
    let v = d.eigenvectors();
    let n = d.dim();
    let kept: Vec<usize> = (0..n).filter(|&k| w[k] > WEIGHT_FLOOR).collect();
    let local_dim = (n as f64).cbrt().round() as usize;

    let real = v.iter().all(|z| z.im == 0.0);
    let matrix = if real {
        let a = DMatrix::<f64>::from_fn(n, kept.len(), |i, c| v[(i, kept[c])].re * w[kept[c]].sqrt());
        (&a * a.transpose()).map(|x| Complex64::new(x, 0.0))
    } else {
        let a = DMatrix::<Complex64>::from_fn(n, kept.len(), |i, c| v[(i, kept[c])] * w[kept[c]].sqrt());
        &a * a.adjoint()
    };
    DensityMatrix::from_parts(matrix, local_dim, vec![1, 2, 3])
}

/// Traces out `traced_site`; the remaining sites keep their order.
pub fn partial_trace(rho: &DensityMatrix, traced_site: usize) -> Result<DensityMatrix> {
    let pos = rho
        .position(traced_site)
        .ok_or_else(|| Error::InvalidSubsystem(format!("site {traced_site} not in {:?}", rho.sites)))?;
    if rho.sites.len() < 2 {
        return Err(Error::InvalidSubsystem("cannot trace out the only site".into()));
    }
    let d = rho.local_dim;
    let stride = rho.stride(pos);
    let outer = rho.dim() / (stride * d);
    let reduced_dim = rho.dim() / d;
    // full index = hi * (d * stride) + k * stride + lo
    let expand = |r: usize, k: usize| (r / stride) * d * stride + k * stride + r % stride;
    debug_assert_eq!(outer * stride, reduced_dim);

    let m = DMatrix::from_fn(reduced_dim, reduced_dim, |i, j| {
        (0..d).map(|k| rho.matrix[(expand(i, k), expand(j, k))]).sum()
    });
    let sites = rho.sites.iter().copied().filter(|&s| s != traced_site).collect();
    DensityMatrix::from_parts(m, d, sites)
}

/// Transposes the indices of `subsystem`, a proper nonempty subset of the sites.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: &[usize]) -> Result<HermitianOperator> {
    if subsystem.is_empty() || subsystem.len() >= rho.sites.len() {
        return Err(Error::InvalidSubsystem(format!(
            "{subsystem:?} is not one side of a bipartition of {:?}",
            rho.sites
        )));
    }
    let mut positions = Vec::with_capacity(subsystem.len());
    for &s in subsystem {
        let p = rho.position(s).ok_or_else(|| Error::InvalidSubsystem(format!("site {s} not in {:?}", rho.sites)))?;
        if positions.contains(&p) {
            return Err(Error::InvalidSubsystem(format!("repeated site {s}")));
        }
        positions.push(p);
    }
    let d = rho.local_dim;
    // Contribution of the transposed digits to a flat index.
    let part: Vec<usize> =
        (0..rho.dim()).map(|i| positions.iter().map(|&p| ((i / rho.stride(p)) % d) * rho.stride(p)).sum()).collect();
    let m = DMatrix::from_fn(rho.dim(), rho.dim(), |i, j| rho.matrix[(i - part[i] + part[j], j - part[j] + part[i])]);
    Ok(HermitianOperator::from_hermitian(m, Unit::Dimensionless))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bipartition {
    /// Two-site reduced state, transposed on `b`.
    Pair { a: usize, b: usize },
    /// One site against the remaining two.
    OneVsRest { site: usize },
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bipartition::Pair { a, b } => write!(f, "{a}|{b}"),
            Bipartition::OneVsRest { site } => {
                let rest: String = (1..=3).filter(|&s| s != site).map(|s| s.to_string()).collect();
                write!(f, "{site}|{rest}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityResult {
    pub value: f64,
    pub negative_eigenvalue_count: usize,
    pub bipartition: Bipartition,
}

/// Negativity from the partial-transpose spectrum, checked against the
/// half-trace-norm form `½ Σ (|λ| - λ)`.
fn negativity_of(pt: &HermitianOperator, bipartition: Bipartition) -> Result<NegativityResult> {
    let lambdas = eigenvalues(pt)?;
    let negatives: Vec<f64> = lambdas.iter().copied().filter(|&l| l < -NEGATIVITY_CUTOFF).collect();
    let value = negatives.iter().fold(0.0, |acc, l| acc + l.abs());
    let half_trace: f64 = 0.5 * lambdas.iter().map(|&l| l.abs() - l).sum::<f64>();
    // The forms differ only by eigenvalues in (-cutoff, 0).
    let allowance = lambdas.len() as f64 * NEGATIVITY_CUTOFF + 1e-12;
    if (value - half_trace).abs() > allowance {
        return Err(Error::Inconsistent(format!("negativity forms disagree: {value:e} vs {half_trace:e}")));
    }
    Ok(NegativityResult { value, negative_eigenvalue_count: negatives.len(), bipartition })
}

/// Negativity of a two-site state, transposing the second site.
pub fn bipartite_negativity(rho_pair: &DensityMatrix) -> Result<NegativityResult> {
    if rho_pair.sites.len() != 2 {
        return Err(Error::InvalidSubsystem(format!("expected a two-site state, got sites {:?}", rho_pair.sites)));
    }
    let (a, b) = (rho_pair.sites[0], rho_pair.sites[1]);
    negativity_of(&partial_transpose(rho_pair, &[b])?, Bipartition::Pair { a, b })
}

/// Pairwise negativity of sites `a < b` of a three-site state.
pub fn pair_negativity(rho: &DensityMatrix, a: usize, b: usize) -> Result<NegativityResult> {
    let traced = rho
        .sites
        .iter()
        .copied()
        .find(|&s| s != a && s != b)
        .ok_or_else(|| Error::InvalidSubsystem("need a three-site state".into()))?;
    bipartite_negativity(&partial_trace(rho, traced)?)
}

/// `N_{site|rest}` from the full partial transpose over `site`.
pub fn one_vs_rest_negativity(rho: &DensityMatrix, site: usize) -> Result<NegativityResult> {
    negativity_of(&partial_transpose(rho, &[site])?, Bipartition::OneVsRest { site })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripartiteNegativity {
    /// Geometric mean of the three one-vs-rest negativities.
    pub value: f64,
    pub factors: [NegativityResult; 3],
}

pub fn tripartite_negativity(rho: &DensityMatrix) -> Result<TripartiteNegativity> {
    if rho.sites != [1, 2, 3] {
        return Err(Error::InvalidSubsystem(format!("expected sites [1, 2, 3], got {:?}", rho.sites)));
    }
    let factors = [one_vs_rest_negativity(rho, 1)?, one_vs_rest_negativity(rho, 2)?, one_vs_rest_negativity(rho, 3)?];
    let value = if factors.iter().any(|f| f.value == 0.0) {
        0.0
    } else {
        factors.iter().map(|f| f.value).product::<f64>().cbrt()
    };
    Ok(TripartiteNegativity { value, factors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Bipartite,
    Tripartite,
}

impl Measure {
    pub fn evaluate(self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Measure::Bipartite => Ok(pair_negativity(rho, 1, 2)?.value),
            Measure::Tripartite => Ok(tripartite_negativity(rho)?.value),
        }
    }
}

/// Smallest temperature at which `measure` drops below [`ZERO_NEGATIVITY`],
/// located by bisection to [`THRESHOLD_RESOLUTION`]. Returns the bracket midpoint.
pub fn threshold_temperature(p: &ModelParameters, measure: Measure, t_bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = t_bracket;
    check_temperature(lo)?;
    check_temperature(hi)?;
    let d = diagonalize(&build_hamiltonian_z(p)?)?;
    let entangled = |t: f64| -> Result<bool> { Ok(measure.evaluate(&thermal_state(&d, t)?)? >= ZERO_NEGATIVITY) };
    if lo >= hi || !entangled(lo)? || entangled(hi)? {
        return Err(Error::BracketDoesNotStraddle { lo, hi });
    }
    while hi - lo > THRESHOLD_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if entangled(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityPoint {
    pub b_tesla: f64,
    pub t_kelvin: f64,
    pub n_bip: f64,
    pub n_trip: f64,
}

/// Both negativities on the `b_grid × t_grid` product, field-major order.
/// One diagonalization per field and one density matrix per point.
pub fn negativity_sweep(
    p: &ModelParameters,
    b_grid: &[f64],
    t_grid: &[f64],
    exec: Execution,
) -> Result<Vec<NegativityPoint>> {
    check_field_grid(b_grid)?;
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("temperature grid is empty".into()));
    }
    for &t in t_grid {
        check_temperature(t)?;
    }
    let rows = exec.map(b_grid, |&b| -> Result<Vec<NegativityPoint>> {
        let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b))?)?;
        t_grid
            .iter()
            .map(|&t| {
                let rho = thermal_state(&d, t)?;
                Ok(NegativityPoint {
                    b_tesla: b,
                    t_kelvin: t,
                    n_bip: pair_negativity(&rho, 1, 2)?.value,
                    n_trip: tripartite_negativity(&rho)?.value,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(b_grid.len() * t_grid.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}
