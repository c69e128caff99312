//! Assignment of zero-field eigenvalues to total-spin sectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::half::HalfInteger;
use crate::operator::SpectralDecomposition;
use crate::spin::{kambe_energy, total_spin_values, ModelParameters};

pub const DEFAULT_SECTOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorEntry {
    pub s_total: HalfInteger,
    /// Lowest-energy component label, `S_T^z = S_T`.
    pub s_total_z: HalfInteger,
    pub kambe_energy: f64,
    /// Number of eigenvalues assigned to this sector.
    pub state_count: usize,
    /// Number of `(2 S_T + 1)`-fold multiplets.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorReport {
    /// Ordered by descending `S_T`.
    pub sectors: Vec<SectorEntry>,
}

impl SectorReport {
    pub fn multiplicity(&self, s_total: HalfInteger) -> Option<usize> {
        self.sectors.iter().find(|e| e.s_total == s_total).map(|e| e.multiplicity)
    }

    /// Multiplicities from `S_T = 15/2` down to `1/2`.
    pub fn census(&self) -> Vec<usize> {
        self.sectors.iter().map(|e| e.multiplicity).collect()
    }

    /// `Σ (2 S_T + 1) · multiplicity`.
    pub fn total_states(&self) -> usize {
        self.sectors.iter().map(|e| (e.s_total.twice() as usize + 1) * e.multiplicity).sum()
    }
}

/// Assigns every eigenvalue of the zero-field Hamiltonian to the unique total
/// spin whose closed-form energy lies within `tol` Kelvin.
pub fn sector_analysis(d: &SpectralDecomposition, p: &ModelParameters, tol: f64) -> Result<SectorReport> {
    if p.b_z != 0.0 {
        return Err(Error::InvalidParameter("sector analysis requires B_z = 0".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("sector tolerance must be positive, got {tol}")));
    }
    let mut sectors: Vec<SectorEntry> = total_spin_values()
        .rev()
        .map(|s| SectorEntry {
            s_total: s,
            s_total_z: s,
            kambe_energy: kambe_energy(s, s, p).expect("valid sector"),
            state_count: 0,
            multiplicity: 0,
        })
        .collect();

    for &e in d.eigenvalues() {
        let mut matches = sectors.iter_mut().filter(|s| (s.kambe_energy - e).abs() <= tol);
        let entry = matches.next().ok_or(Error::Unassignable(e))?;
        entry.state_count += 1;
        if matches.next().is_some() {
            return Err(Error::Inconsistent(format!("eigenvalue {e} K matches several sectors within {tol} K")));
        }
    }
    for entry in &mut sectors {
        let width = entry.s_total.twice() as usize + 1;
        if entry.state_count % width != 0 {
            return Err(Error::Inconsistent(format!(
                "sector S_T = {} holds {} states, not a multiple of {width}",
                entry.s_total, entry.state_count
            )));
        }
        entry.multiplicity = entry.state_count / width;
    }
    Ok(SectorReport { sectors })
}
