//! Spin operators on the three-site product space and the two model
//! Hamiltonians of the spin-5/2 triangle.
//!
//! Basis convention: product states `|m1, m2, m3>` with `m` descending from
//! `+s` at each site and site 1 the slowest-varying index, so the flat index
//! is `i1 * d² + i2 * d + i3` where `i = s - m`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::half::HalfInteger;
use crate::operator::{HermitianOperator, Unit};
use crate::units::{CM_TO_K, MU_B_OVER_K_B};

/// Number of spins in the cluster.
pub const SITES: usize = 3;

const PAIRS: [(usize, usize); 3] = [(1, 2), (2, 3), (1, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinQuantum {
    two_s: u32,
}

impl SpinQuantum {
    /// High-spin iron(III): s = 5/2.
    pub const FE3: SpinQuantum = SpinQuantum { two_s: 5 };

    pub fn new(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(Error::InvalidSpin(two_s));
        }
        Ok(Self { two_s })
    }

    pub fn two_s(self) -> u32 {
        self.two_s
    }

    pub fn spin(self) -> f64 {
        f64::from(self.two_s) / 2.0
    }

    pub fn local_dim(self) -> usize {
        self.two_s as usize + 1
    }

    /// `m` of local level `i` (level 0 is `m = +s`).
    pub fn m_of_level(self, level: usize) -> f64 {
        self.spin() - level as f64
    }

    pub fn m_half_of_level(self, level: usize) -> HalfInteger {
        HalfInteger::from_twice(self.two_s as i32 - 2 * level as i32)
    }

    /// Dimension of the three-site product space.
    pub fn cluster_dim(self) -> usize {
        self.local_dim().pow(SITES as u32)
    }
}

impl Default for SpinQuantum {
    fn default() -> Self {
        Self::FE3
    }
}

/// Single-site spin matrices in the descending-`m` basis (ħ = 1).
#[derive(Debug, Clone)]
pub struct LocalSpinOperators {
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
    pub s_plus: DMatrix<Complex64>,
    pub s_minus: DMatrix<Complex64>,
}

pub fn build_local_spin_operators(spin: SpinQuantum) -> LocalSpinOperators {
    let d = spin.local_dim();
    let s = spin.spin();
    let mut sz = DMatrix::zeros(d, d);
    let mut s_plus = DMatrix::zeros(d, d);
    for i in 0..d {
        sz[(i, i)] = Complex64::new(spin.m_of_level(i), 0.0);
    }
    // <m+1| S+ |m> = sqrt(s(s+1) - m(m+1)); level i-1 holds m+1.
    for i in 1..d {
        let m = spin.m_of_level(i);
        s_plus[(i - 1, i)] = Complex64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let s_minus = s_plus.adjoint();
    let sx = (&s_plus + &s_minus).scale(0.5);
    let sy = (&s_plus - &s_minus) * Complex64::new(0.0, -0.5);
    LocalSpinOperators { sx, sy, sz, s_plus, s_minus }
}

/// `a ⊗ b ⊗ c`.
pub fn kron3(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b).kronecker(c)
}

fn check_site(site: usize) -> Result<()> {
    if (1..=SITES).contains(&site) {
        Ok(())
    } else {
        Err(Error::InvalidSite { site, sites: SITES })
    }
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` at `site` (1-based).
pub fn embed_at_site(op: &DMatrix<Complex64>, site: usize, spin: SpinQuantum) -> Result<DMatrix<Complex64>> {
    let d = spin.local_dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.nrows().max(op.ncols()) });
    }
    check_site(site)?;
    let id = DMatrix::identity(d, d);
    let mut factors = [&id, &id, &id];
    factors[site - 1] = op;
    Ok(kron3(factors[0], factors[1], factors[2]))
}

/// Embeds a Hermitian single-site operator.
pub fn embed_hermitian(
    op: &DMatrix<Complex64>,
    site: usize,
    spin: SpinQuantum,
    unit: Unit,
) -> Result<HermitianOperator> {
    HermitianOperator::new(embed_at_site(op, site, spin)?, unit)
}

/// Local level (0 = `m = +s`) of `site` in the flat basis index.
pub fn site_level(index: usize, site: usize, local_dim: usize) -> usize {
    let stride = local_dim.pow((SITES - site) as u32);
    (index / stride) % local_dim
}

/// `m` of `site` for each basis state.
pub fn site_m_values(site: usize, spin: SpinQuantum) -> Vec<f64> {
    let d = spin.local_dim();
    (0..spin.cluster_dim()).map(|i| spin.m_of_level(site_level(i, site, d))).collect()
}

/// Total `S_T^z` eigenvalue for each basis state.
pub fn total_m_values(spin: SpinQuantum) -> Vec<f64> {
    let d = spin.local_dim();
    (0..spin.cluster_dim()).map(|i| (1..=SITES).map(|site| spin.m_of_level(site_level(i, site, d))).sum()).collect()
}

pub fn total_sz(spin: SpinQuantum) -> HermitianOperator {
    HermitianOperator::from_real_diagonal(&total_m_values(spin), Unit::Dimensionless)
}

fn pair_dot(ops: &LocalSpinOperators, site_a: usize, site_b: usize, d: usize) -> DMatrix<Complex64> {
    let id = DMatrix::identity(d, d);
    let mut out = DMatrix::zeros(d.pow(3), d.pow(3));
    for op in [&ops.sx, &ops.sy, &ops.sz] {
        let mut factors = [&id, &id, &id];
        factors[site_a - 1] = op;
        factors[site_b - 1] = op;
        out += kron3(factors[0], factors[1], factors[2]);
    }
    out
}

/// `S1·S2 + S2·S3 + S1·S3` (dimensionless).
pub fn exchange_operator(spin: SpinQuantum) -> DMatrix<Complex64> {
    let ops = build_local_spin_operators(spin);
    let d = spin.local_dim();
    let mut out = DMatrix::zeros(spin.cluster_dim(), spin.cluster_dim());
    for (a, b) in PAIRS {
        out += pair_dot(&ops, a, b, d);
    }
    out
}

/// `S_T² = Σ_i S_i² + 2 Σ_{i<j} S_i·S_j`.
pub fn total_spin_squared(spin: SpinQuantum) -> HermitianOperator {
    let s = spin.spin();
    let n = spin.cluster_dim();
    let single = 3.0 * s * (s + 1.0);
    let m = exchange_operator(spin).scale(2.0) + DMatrix::<Complex64>::identity(n, n).scale(single);
    HermitianOperator::from_hermitian(m, Unit::Dimensionless)
}

/// Collective raising operator `J+ = Σ_i S_i^+`.
pub fn total_raising(spin: SpinQuantum) -> DMatrix<Complex64> {
    let ops = build_local_spin_operators(spin);
    let mut out = DMatrix::zeros(spin.cluster_dim(), spin.cluster_dim());
    for site in 1..=SITES {
        out += embed_at_site(&ops.s_plus, site, spin).expect("valid site");
    }
    out
}

/// Exchange coupling, g-factor and fields of the triangle model.
///
/// `j_coupling` is in cm⁻¹, fields in Tesla.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParameters {
    pub j_coupling: f64,
    pub g_factor: f64,
    pub b_z: f64,
    pub b_x: f64,
}

impl ModelParameters {
    pub const FE3_J_CM: f64 = 12.56;
    pub const FE3_G: f64 = 2.0;

    /// Reference parameters, zero field.
    pub fn fe3() -> Self {
        Self { j_coupling: Self::FE3_J_CM, g_factor: Self::FE3_G, b_z: 0.0, b_x: 0.0 }
    }

    pub fn with_b_z(self, b_z: f64) -> Self {
        Self { b_z, ..self }
    }

    pub fn with_b_x(self, b_x: f64) -> Self {
        Self { b_x, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.j_coupling, self.g_factor, self.b_z, self.b_x].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("model parameters must be finite".into()));
        }
        if self.g_factor <= 0.0 {
            return Err(Error::InvalidParameter(format!("g factor must be positive, got {}", self.g_factor)));
        }
        Ok(())
    }

    /// Exchange constant in Kelvin.
    pub fn j_kelvin(&self) -> f64 {
        self.j_coupling * CM_TO_K
    }

    /// Zeeman energy per Tesla per unit spin projection, `g μ_B / k_B` in K/T.
    pub fn zeeman_kelvin_per_tesla(&self) -> f64 {
        self.g_factor * MU_B_OVER_K_B
    }
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self::fe3()
    }
}

/// Isotropic Heisenberg triangle in a longitudinal field, in Kelvin.
pub fn build_hamiltonian_z(p: &ModelParameters) -> Result<HermitianOperator> {
    p.validate()?;
    let spin = SpinQuantum::FE3;
    let mut h = exchange_operator(spin).scale(p.j_kelvin());
    let zeeman = p.zeeman_kelvin_per_tesla() * p.b_z;
    if zeeman != 0.0 {
        for (i, m) in total_m_values(spin).into_iter().enumerate() {
            h[(i, i)] -= Complex64::new(zeeman * m, 0.0);
        }
    }
    Ok(HermitianOperator::from_hermitian(h, Unit::EnergyKelvin))
}

/// Heisenberg triangle with a transverse field acting on site 1 only, in Kelvin.
pub fn build_hamiltonian_local_x(p: &ModelParameters) -> Result<HermitianOperator> {
    p.validate()?;
    let spin = SpinQuantum::FE3;
    let mut h = exchange_operator(spin).scale(p.j_kelvin());
    let zeeman = p.zeeman_kelvin_per_tesla() * p.b_x;
    if zeeman != 0.0 {
        let ops = build_local_spin_operators(spin);
        h -= embed_at_site(&ops.sx, 1, spin)?.scale(zeeman);
    }
    Ok(HermitianOperator::from_hermitian(h, Unit::EnergyKelvin))
}

/// Admissible total spins for three spin-5/2 sites: 1/2, 3/2, …, 15/2.
pub fn total_spin_values() -> impl DoubleEndedIterator<Item = HalfInteger> {
    (0..8).map(|k| HalfInteger::from_twice(2 * k + 1))
}

pub fn max_total_spin() -> HalfInteger {
    HalfInteger::from_twice(3 * SpinQuantum::FE3.two_s() as i32)
}

fn valid_total_spin(s_total: HalfInteger) -> bool {
    let t = s_total.twice();
    t >= 1 && t <= max_total_spin().twice() && t % 2 == 1
}

/// Closed-form energy of the `(S_T, S_T^z)` level in Kelvin.
pub fn kambe_energy(s_total: HalfInteger, s_total_z: HalfInteger, p: &ModelParameters) -> Result<f64> {
    let ok = valid_total_spin(s_total)
        && s_total_z.twice().abs() <= s_total.twice()
        && (s_total.twice() - s_total_z.twice()) % 2 == 0;
    if !ok {
        return Err(Error::InvalidQuantumNumbers { s_total: s_total.to_string(), s_total_z: s_total_z.to_string() });
    }
    let s = s_total.value();
    let single = SpinQuantum::FE3.spin();
    let exchange = 0.5 * p.j_kelvin() * (s * (s + 1.0) - 3.0 * single * (single + 1.0));
    Ok(exchange - p.zeeman_kelvin_per_tesla() * p.b_z * s_total_z.value())
}

/// Field (Tesla) at which the lowest `|S_T, S_T>` and `|S_T+1, S_T+1>` levels cross:
/// `g μ_B B = (S_T + 1) J`.
pub fn level_crossing_field(s_total: HalfInteger, p: &ModelParameters) -> Result<f64> {
    if !valid_total_spin(s_total) {
        return Err(Error::InvalidQuantumNumbers { s_total: s_total.to_string(), s_total_z: s_total.to_string() });
    }
    if s_total >= max_total_spin() {
        return Err(Error::NoHigherSector(s_total.to_string()));
    }
    Ok((s_total.value() + 1.0) * p.j_kelvin() / p.zeeman_kelvin_per_tesla())
}

/// All ground-state crossing fields, ascending.
pub fn level_crossing_fields(p: &ModelParameters) -> Vec<f64> {
    total_spin_values()
        .filter(|s| *s < max_total_spin())
        .map(|s| level_crossing_field(s, p).expect("valid sector"))
        .collect()
}
