//! Capacitively coupled readout resonator: dispersive shifts, transmission
//! and the IQ rotation used to read out populations.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::hamiltonian::Spectrum;
use crate::{Error, Result};

/// Default half-width of the band around the resonator inside which a qubit
/// transition is treated as resonant, Hz.
pub const DEFAULT_GUARD_BAND: f64 = 1e3;

/// Readout resonator. Frequencies are linear (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    pub omega_res: f64,
    pub g: f64,
    pub kappa: f64,
    /// Characteristic impedance, Ω.
    pub z0: f64,
}

impl ResonatorParams {
    pub fn new(omega_res: f64, g: f64, kappa: f64) -> Result<Self> {
        let res = Self {
            omega_res,
            g,
            kappa,
            z0: 50.0,
        };
        res.validate()?;
        Ok(res)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_res.is_finite()
            && self.omega_res > 0.0
            && self.kappa.is_finite()
            && self.kappa > 0.0
            && self.g.is_finite()
            && self.g >= 0.0
            && self.z0.is_finite()
            && self.z0 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "resonator parameters out of range: {self:?}"
            )))
        }
    }

    /// Loaded quality factor `ω_res/κ`; coupling Q is taken equal to it.
    pub fn quality_factor(&self) -> f64 {
        self.omega_res / self.kappa
    }
}

/// Per-state resonator response at the probe frequency `ω_res + χ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedResponse {
    /// Dispersive shifts χ_i, Hz.
    pub chi: Vec<f64>,
    /// Unrotated S21 for each state.
    pub s21_points: Vec<Complex<f64>>,
    pub rotation_angle: f64,
}

impl DressedResponse {
    /// `Re{e^{iθ} S21_i}` for each state.
    pub fn readout_weights(&self) -> Vec<f64> {
        let r = Complex::from_polar(1.0, self.rotation_angle);
        self.s21_points.iter().map(|p| (p * r).re).collect()
    }
}

/// χ_i = Σ_{j≠i} 2 g² |⟨i|n̂|j⟩|² ω_ij / (ω_ij² − ω_res²), returned in Hz.
pub fn dispersive_shift(spec: &Spectrum, res: &ResonatorParams, state: usize) -> Result<f64> {
    dispersive_shift_with_guard(spec, res, state, DEFAULT_GUARD_BAND)
}

pub fn dispersive_shift_with_guard(spec: &Spectrum, res: &ResonatorParams, state: usize, guard: f64) -> Result<f64> {
    spec.check_level(state)?;
    let fr = res.omega_res;
    let mut chi = 0.0;
    for j in 0..spec.n_levels {
        if j == state {
            continue;
        }
        let fij = spec.transition(state, j);
        if (fij.abs() - fr).abs() <= guard {
            return Err(Error::ResonanceCollision {
                i: state,
                j,
                transition_hz: fij,
                resonator_hz: fr,
                guard_hz: guard,
            });
        }
        chi += 2.0 * res.g * res.g * spec.n_sq(state, j) * fij / (fij * fij - fr * fr);
    }
    Ok(chi)
}

/// Dispersive shifts for every level of `spec`.
pub fn dispersive_shifts(spec: &Spectrum, res: &ResonatorParams) -> Result<Vec<f64>> {
    (0..spec.n_levels).map(|i| dispersive_shift(spec, res, i)).collect()
}

/// Transmission past the resonator dressed by `chi_i`, probed at `probe` (Hz),
/// with equal loaded and coupling quality factors `ω_res/κ`.
pub fn s21(res: &ResonatorParams, chi_i: f64, probe: f64) -> Complex<f64> {
    let q_load = res.quality_factor();
    let q_coup = q_load;
    let dressed = res.omega_res + chi_i;
    let detuning = probe - dressed;
    let denom = Complex::new(1.0, 2.0 * q_load * detuning / dressed);
    Complex::new(1.0, 0.0) - (q_load / q_coup) / denom
}

/// Global phase `θ ∈ [0, π)` maximizing `|Re{e^{iθ}(p0 − p1)}|`, and the rotated points.
pub fn rotate_for_contrast(points: &[Complex<f64>]) -> Result<(f64, Vec<Complex<f64>>)> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points to rotate, got {}",
            points.len()
        )));
    }
    let d = points[0] - points[1];
    let theta = if d.norm() == 0.0 {
        0.0
    } else {
        let t = (-d.arg()).rem_euclid(PI);
        // rem_euclid can round up to exactly π
        if t >= PI {
            0.0
        } else {
            t
        }
    };
    let r = Complex::from_polar(1.0, theta);
    Ok((theta, points.iter().map(|p| p * r).collect()))
}

/// Per-state shifts, transmissions and rotation for the probe at `ω_res + χ_0`.
pub fn dressed_response(spec: &Spectrum, res: &ResonatorParams) -> Result<DressedResponse> {
    let chi = dispersive_shifts(spec, res)?;
    let probe = res.omega_res + chi[0];
    let s21_points: Vec<_> = chi.iter().map(|&c| s21(res, c, probe)).collect();
    let (rotation_angle, _) = rotate_for_contrast(&s21_points)?;
    Ok(DressedResponse {
        chi,
        s21_points,
        rotation_angle,
    })
}

/// `C_c = ħ g C_Σ / (2 e ω_res) · sqrt(π / (2 ħ Z0))` with angular g and ω_res.
pub fn coupling_capacitance(res: &ResonatorParams, c_sigma: f64) -> f64 {
    let g = 2.0 * PI * res.g;
    let wr = 2.0 * PI * res.omega_res;
    HBAR * g * c_sigma / (2.0 * ELEMENTARY_CHARGE * wr) * (PI / (2.0 * HBAR * res.z0)).sqrt()
}
