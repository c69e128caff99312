//! Thermal equilibrium: partition function, free energy and magnetization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::half::HalfInteger;
use crate::operator::{diagonalize, SpectralDecomposition};
use crate::spin::{
    build_hamiltonian_z, kambe_energy, max_total_spin, total_m_values, total_spin_values, ModelParameters, SpinQuantum,
};

/// Step for the free-energy derivative, Tesla.
pub const FIELD_STEP: f64 = 1e-3;

pub const DEFAULT_PLATEAU_SLOPE: f64 = 1e-4;
pub const DEFAULT_PLATEAU_MIN_WIDTH: f64 = 1.0;

/// `⟨S_T^z⟩` at saturation.
pub fn saturation_sz() -> f64 {
    max_total_spin().value()
}

pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(t))
    }
}

/// Partition function in shifted form, `Z = exp(-E_min/T) · Σ exp(-(E_i - E_min)/T)`.
///
/// The unshifted value overflows at millikelvin temperatures, so both factors
/// are kept separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionFunction {
    pub temperature: f64,
    pub ground_energy: f64,
    /// `Σ exp(-(E_i - E_min)/T)`, always ≥ 1.
    pub relative: f64,
}

impl PartitionFunction {
    pub fn ln(&self) -> f64 {
        self.relative.ln() - self.ground_energy / self.temperature
    }

    /// Unshifted `Z`; may overflow to infinity at low temperature.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }

    /// Gibbs free energy `G = -T ln Z` in Kelvin.
    pub fn free_energy(&self) -> f64 {
        self.ground_energy - self.temperature * self.relative.ln()
    }
}

pub fn partition_function(d: &SpectralDecomposition, t: f64) -> Result<PartitionFunction> {
    check_temperature(t)?;
    let e0 = d.ground_energy();
    let relative = d.eigenvalues().iter().map(|&e| (-(e - e0) / t).exp()).sum();
    Ok(PartitionFunction { temperature: t, ground_energy: e0, relative })
}

/// Normalized Boltzmann weights of the eigenstates.
pub fn boltzmann_weights(d: &SpectralDecomposition, t: f64) -> Result<Vec<f64>> {
    let z = partition_function(d, t)?;
    let e0 = d.ground_energy();
    Ok(d.eigenvalues().iter().map(|&e| (-(e - e0) / t).exp() / z.relative).collect())
}

/// `⟨i|S_T^z|i⟩` for each eigenvector.
pub fn eigenstate_sz(d: &SpectralDecomposition) -> Vec<f64> {
    let m = total_m_values(SpinQuantum::FE3);
    let v = d.eigenvectors();
    (0..d.dim()).map(|k| v.column(k).iter().zip(&m).map(|(c, mb)| c.norm_sqr() * mb).sum()).collect()
}

/// Thermal average `Σ_i ⟨i|S_T^z|i⟩ e^{-E_i/T} / Z`.
pub fn thermal_magnetization(d: &SpectralDecomposition, t: f64) -> Result<f64> {
    let w = boltzmann_weights(d, t)?;
    Ok(eigenstate_sz(d).iter().zip(&w).map(|(s, w)| s * w).sum())
}

/// [`thermal_magnetization`], exactly zero at zero field where the spectrum
/// is symmetric under `S^z → -S^z` (rounding in degenerate eigenvectors would
/// otherwise leave ~1e-12).
fn field_magnetization(d: &SpectralDecomposition, b_z: f64, t: f64) -> Result<f64> {
    if b_z == 0.0 {
        check_temperature(t)?;
        return Ok(0.0);
    }
    thermal_magnetization(d, t)
}

/// `⟨S_T^z⟩` from both the thermal average and `-(∂G/∂B_z)_T / (g μ_B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnetizationValue {
    pub b_z: f64,
    pub temperature: f64,
    pub thermal: f64,
    pub from_free_energy: f64,
}

impl MagnetizationValue {
    pub fn discrepancy(&self) -> f64 {
        (self.thermal - self.from_free_energy).abs()
    }
}

pub fn magnetization(p: &ModelParameters, t: f64) -> Result<MagnetizationValue> {
    check_temperature(t)?;
    let free_energy = |b: f64| -> Result<f64> {
        let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b))?)?;
        Ok(partition_function(&d, t)?.free_energy())
    };
    let d = diagonalize(&build_hamiltonian_z(p)?)?;
    let thermal = field_magnetization(&d, p.b_z, t)?;
    let dg = (free_energy(p.b_z + FIELD_STEP)? - free_energy(p.b_z - FIELD_STEP)?) / (2.0 * FIELD_STEP);
    Ok(MagnetizationValue { b_z: p.b_z, temperature: t, thermal, from_free_energy: -dg / p.zeeman_kelvin_per_tesla() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnetizationPoint {
    pub b_z: f64,
    pub m_z: f64,
    pub m_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagnetizationCurve {
    pub temperature: f64,
    pub points: Vec<MagnetizationPoint>,
}

impl MagnetizationCurve {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].m_z >= w[0].m_z - tol)
    }
}

pub(crate) fn check_field_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("field grid is empty".into()));
    }
    if grid.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::InvalidGrid("field grid values must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("field grid must be sorted ascending".into()));
    }
    Ok(())
}

/// Isothermal magnetization, one diagonalization per field value.
pub fn magnetization_curve(p: &ModelParameters, t: f64, b_grid: &[f64], exec: Execution) -> Result<MagnetizationCurve> {
    check_temperature(t)?;
    check_field_grid(b_grid)?;
    let sat = saturation_sz();
    let points = exec
        .map(b_grid, |&b| -> Result<MagnetizationPoint> {
            let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b))?)?;
            let m_z = field_magnetization(&d, b, t)?;
            Ok(MagnetizationPoint { b_z: b, m_z, m_normalized: m_z / sat })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MagnetizationCurve { temperature: t, points })
}

/// Zero-temperature staircase from the closed-form ground state at each field.
pub fn ground_state_staircase(p: &ModelParameters, b_grid: &[f64]) -> Result<MagnetizationCurve> {
    check_field_grid(b_grid)?;
    let sat = saturation_sz();
    let mut points = Vec::with_capacity(b_grid.len());
    for &b in b_grid {
        let q = p.with_b_z(b);
        let mut best: Option<(f64, HalfInteger)> = None;
        for s in total_spin_values() {
            let e = kambe_energy(s, s, &q)?;
            if best.is_none_or(|(be, _)| e < be) {
                best = Some((e, s));
            }
        }
        let m_z = best.expect("non-empty ladder").1.value();
        points.push(MagnetizationPoint { b_z: b, m_z, m_normalized: m_z / sat });
    }
    Ok(MagnetizationCurve { temperature: 0.0, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub b_start: f64,
    pub b_end: f64,
    /// Mean normalized magnetization over the interval.
    pub m_normalized: f64,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        self.b_end - self.b_start
    }

    /// Nearest `k/15` with `k` odd, as `k`.
    pub fn nearest_fraction(&self) -> u32 {
        let scaled = self.m_normalized * 2.0 * saturation_sz();
        let k = ((scaled - 1.0) / 2.0).round().max(0.0) * 2.0 + 1.0;
        k as u32
    }
}

/// Maximal field intervals of width ≥ `min_width` where `|dm/dB| < slope_threshold`
/// (normalized magnetization per Tesla, central differences on the grid).
pub fn detect_plateaus(curve: &MagnetizationCurve, slope_threshold: f64, min_width: f64) -> Vec<Plateau> {
    let pts = &curve.points;
    let n = pts.len();
    if n < 2 {
        return Vec::new();
    }
    let slope = |i: usize| -> f64 {
        let (a, b) = match i {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        (pts[b].m_normalized - pts[a].m_normalized) / (pts[b].b_z - pts[a].b_z)
    };
    let flat: Vec<bool> = (0..n).map(|i| slope(i).abs() < slope_threshold).collect();

    let mut plateaus = Vec::new();
    let mut i = 0;
    while i < n {
        if !flat[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && flat[i] {
            i += 1;
        }
        let run = &pts[start..i];
        let width = run[run.len() - 1].b_z - run[0].b_z;
        if width >= min_width {
            let mean = run.iter().map(|p| p.m_normalized).sum::<f64>() / run.len() as f64;
            plateaus.push(Plateau { b_start: run[0].b_z, b_end: run[run.len() - 1].b_z, m_normalized: mean });
        }
    }
    plateaus
}
