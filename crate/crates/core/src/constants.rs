//! Physical constants (SI, exact 2019 definitions) and fixed reference values.

use std::f64::consts::PI;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

/// Reference frequency for the effective capacitive quality factor, Hz.
pub const QC_REFERENCE_FREQUENCY: f64 = 6.0e9;

/// `h f / k_B T` for a linear frequency in Hz and a temperature in K.
pub fn reduced_energy(freq_hz: f64, temperature: f64) -> f64 {
    PLANCK * freq_hz / (BOLTZMANN * temperature)
}
