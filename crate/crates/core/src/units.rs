//! Physical constants. Energies are carried in Kelvin throughout (k_B = 1).

/// Kelvin per wavenumber (cm⁻¹).
pub const CM_TO_K: f64 = 1.438_776_9;

/// Bohr magneton over Boltzmann constant, K/T.
pub const MU_B_OVER_K_B: f64 = 0.671_713_81;

/// ħ/k_B in ps·K. A dimensionless time θ corresponds to θ·ħ/k_B.
pub const HBAR_OVER_K_B_PS: f64 = 7.638_24;

/// Converts a dimensionless evolution time θ (units of ħ/k_B per Kelvin) to picoseconds.
pub fn theta_to_ps(theta: f64) -> f64 {
    theta * HBAR_OVER_K_B_PS
}
