//! Directional transition rates `Γ_{i→j}` for each relaxation channel.
//!
//! Every channel is a golden-rule rate built from a matrix element of the
//! operator the noise couples to and a noise spectral density at `|ω_ij|`.
//! Thermal channels split their symmetrized `coth` spectrum into a downward
//! factor `1 + n̄` and an upward factor `n̄`, with `n̄` the Bose occupation,
//! so that `Γ_{i→j}/Γ_{j→i}` is the Boltzmann ratio.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, FLUX_QUANTUM, HBAR, PLANCK, QC_REFERENCE_FREQUENCY};
use crate::hamiltonian::Spectrum;
use crate::resonator::{coupling_capacitance, ResonatorParams};
use crate::{Error, Result};

/// Impedance of the charge and flux control lines, Ω.
pub const LINE_IMPEDANCE: f64 = 50.0;

/// Noise environment shared by all channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Effective qubit temperature, K.
    pub t_qubit: f64,
    /// Effective resonator temperature, K.
    pub t_res: f64,
    /// Flux-noise power at 1 Hz in units of Φ0².
    pub a_phi: f64,
    pub alpha: f64,
    pub x_qp: f64,
    /// Superconducting gap as a frequency, Hz.
    pub gap: f64,
    /// Charge-line coupling capacitance, F.
    pub c_drive: f64,
    /// Flux-line mutual inductance, Wb/A.
    pub m_drive: f64,
    pub n_array: u32,
    /// Effective capacitive quality factor at 6 GHz.
    pub qc_eff: f64,
    pub epsilon: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            t_qubit: 0.040,
            t_res: 0.065,
            a_phi: 0.0,
            alpha: 1.0,
            x_qp: 0.0,
            gap: 44e9,
            c_drive: 20e-18,
            m_drive: FLUX_QUANTUM / 0.0215,
            n_array: 151,
            qc_eff: 3e5,
            epsilon: 0.25,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("t_qubit", self.t_qubit > 0.0),
            ("t_res", self.t_res > 0.0),
            ("qc_eff", self.qc_eff > 0.0),
            ("a_phi", self.a_phi >= 0.0),
            ("x_qp", self.x_qp >= 0.0),
            ("gap", self.gap > 0.0),
            ("c_drive", self.c_drive >= 0.0),
            ("m_drive", self.m_drive >= 0.0),
            ("n_array", self.n_array >= 1),
            ("alpha", self.alpha.is_finite()),
            ("epsilon", self.epsilon.is_finite()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::InvalidParameter(format!(
                "environment field {name} out of range"
            ))),
            None => Ok(()),
        }
    }
}

/// Relaxation channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Capacitive,
    FluxNoise,
    QpJunction,
    QpArray,
    ChargeLine,
    FluxLine,
    Purcell,
}

impl Mechanism {
    pub const ALL: [Mechanism; 7] = [
        Mechanism::Capacitive,
        Mechanism::FluxNoise,
        Mechanism::QpJunction,
        Mechanism::QpArray,
        Mechanism::ChargeLine,
        Mechanism::FluxLine,
        Mechanism::Purcell,
    ];

    /// Channels that enter the quality-factor inversion.
    pub const ANALYSIS: [Mechanism; 5] = [
        Mechanism::Capacitive,
        Mechanism::FluxNoise,
        Mechanism::ChargeLine,
        Mechanism::FluxLine,
        Mechanism::Purcell,
    ];

    /// Non-capacitive channels tested by the exclusion filter.
    pub const EXCLUSION: [Mechanism; 4] = [
        Mechanism::FluxNoise,
        Mechanism::ChargeLine,
        Mechanism::FluxLine,
        Mechanism::Purcell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Capacitive => "capacitive",
            Mechanism::FluxNoise => "flux_noise",
            Mechanism::QpJunction => "qp_junction",
            Mechanism::QpArray => "qp_array",
            Mechanism::ChargeLine => "charge_line",
            Mechanism::FluxLine => "flux_line",
            Mechanism::Purcell => "purcell",
        }
    }

    /// Whether the channel obeys quantum detailed balance.
    pub fn detailed_balance(self) -> bool {
        self != Mechanism::FluxNoise
    }

    /// Temperature setting the up/down asymmetry.
    pub fn temperature(self, env: &Environment) -> f64 {
        match self {
            Mechanism::Purcell => env.t_res,
            _ => env.t_qubit,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mechanism {s:?}")))
    }
}

/// Quasiparticle tunneling site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpSite {
    Junction,
    Array,
}

/// Control line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveLine {
    Charge,
    Flux,
}

/// `rates[(i, j)] = Γ_{i→j}` in 1/s, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismRateTable {
    pub mechanism: Mechanism,
    pub rates: DMatrix<f64>,
}

impl MechanismRateTable {
    pub fn n(&self) -> usize {
        self.rates.nrows()
    }

    /// `Γ_{i→j} + Γ_{j→i}`.
    pub fn pair_sum(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)] + self.rates[(j, i)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mechanism: self.mechanism,
            rates: &self.rates * factor,
        }
    }
}

/// Frequency-dependent quality factor `Q'(f) = qc_eff (6 GHz / f)^ε`.
pub fn q_of_frequency(env: &Environment, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quality factor needs a positive frequency, got {f}"
        )));
    }
    Ok(env.qc_eff * (QC_REFERENCE_FREQUENCY / f).powf(env.epsilon))
}

/// Bose occupation `1/(e^{hf/kT} − 1)`.
pub fn bose_occupation(f: f64, temperature: f64) -> f64 {
    1.0 / crate::constants::reduced_energy(f, temperature).exp_m1()
}

/// `coth(hf/2kT)`
pub fn coth_factor(f: f64, temperature: f64) -> f64 {
    1.0 + 2.0 * bose_occupation(f, temperature)
}

/// A pair of distinct levels and the signed frequency `E_j − E_i`.
struct Pair {
    i: usize,
    j: usize,
    /// `|E_j − E_i|`, Hz.
    f: f64,
    downward: bool,
}

fn pair(spec: &Spectrum, i: usize, j: usize) -> Result<Pair> {
    spec.check_level(i)?;
    spec.check_level(j)?;
    if i == j {
        return Err(Error::InvalidParameter(format!(
            "transition needs distinct levels, got {i} -> {j}"
        )));
    }
    let fij = spec.transition(i, j);
    if fij == 0.0 {
        return Err(Error::ZeroTransition { i, j });
    }
    Ok(Pair {
        i,
        j,
        f: fij.abs(),
        downward: fij < 0.0,
    })
}

/// Directional factor `1 + n̄` (down) or `n̄` (up); the pair sums to `coth`.
fn thermal_split(p: &Pair, temperature: f64) -> f64 {
    let n = bose_occupation(p.f, temperature);
    if p.downward {
        1.0 + n
    } else {
        n
    }
}

/// Dielectric loss of the shunt capacitance: the pair sums to
/// `16 E_C/(ħ Q'(f)) |⟨i|n̂|j⟩|² coth(hf/2kT)`.
pub fn rate_capacitive(spec: &Spectrum, env: &Environment, i: usize, j: usize) -> Result<f64> {
    let p = pair(spec, i, j)?;
    let q = q_of_frequency(env, p.f)?;
    let amplitude = 32.0 * PI * spec.params.ec / q * spec.n_sq(p.i, p.j);
    Ok(amplitude * thermal_split(&p, env.t_qubit))
}

/// Classical `1/f^α` flux noise, equal in both directions.
pub fn rate_flux_noise(spec: &Spectrum, env: &Environment, i: usize, j: usize) -> Result<f64> {
    let p = pair(spec, i, j)?;
    let omega = 2.0 * PI * p.f;
    let coupling = 4.0 * PI * PI * spec.params.el;
    let s_phi = (2.0 * PI * env.a_phi / omega).powf(env.alpha);
    Ok(2.0 * coupling * coupling * spec.phi_sq(p.i, p.j) * s_phi)
}

/// Quasiparticle tunneling across the small junction or through the array.
///
/// Excitation is the relaxation rate suppressed by `exp(−hf/kT)`.
pub fn rate_quasiparticle(spec: &Spectrum, env: &Environment, i: usize, j: usize, site: QpSite) -> Result<f64> {
    let p = pair(spec, i, j)?;
    if env.x_qp > 0.0 && p.f > env.gap / 10.0 {
        log::debug!(
            "transition {}->{} at {:.3e} Hz is not small compared with the gap",
            p.i,
            p.j,
            p.f
        );
    }
    let root = (2.0 * env.gap / p.f).sqrt();
    // 16 E_J/(π ħ) = 32 ej and 2 E_L/(π ħ) = 4 el for energies given as frequencies
    let down = match site {
        QpSite::Junction => 32.0 * spec.params.ej * env.x_qp * root * spec.sin_half_sq(p.i, p.j),
        QpSite::Array => 4.0 * spec.params.el * env.x_qp * root * spec.phi_sq(p.i, p.j),
    };
    if p.downward {
        Ok(down)
    } else {
        Ok(down * (-crate::constants::reduced_energy(p.f, env.t_qubit)).exp())
    }
}

/// Emission into the 50 Ω charge or flux control line.
///
/// The pair sums are
/// `(8 e² ω/ħ)(C_d/C_Σ)² |⟨i|n̂|j⟩|² Z0 coth` for the charge line and
/// `8π² E_L² M_d² ω/(ħ Φ0² Z0) |⟨i|φ̂|j⟩|² coth` for the flux line.
pub fn rate_radiative(spec: &Spectrum, env: &Environment, i: usize, j: usize, line: DriveLine) -> Result<f64> {
    let p = pair(spec, i, j)?;
    let omega = 2.0 * PI * p.f;
    let amplitude = match line {
        DriveLine::Charge => {
            let ratio = env.c_drive / spec.params.c_sigma();
            8.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * omega / HBAR
                * ratio
                * ratio
                * spec.n_sq(p.i, p.j)
                * LINE_IMPEDANCE
        }
        DriveLine::Flux => {
            let el = PLANCK * spec.params.el;
            8.0 * PI * PI * el * el * env.m_drive * env.m_drive * omega
                / (HBAR * FLUX_QUANTUM * FLUX_QUANTUM * LINE_IMPEDANCE)
                * spec.phi_sq(p.i, p.j)
        }
    };
    Ok(amplitude * thermal_split(&p, env.t_qubit))
}

/// Resonator–feedline mutual inductance `(Z0/ω_res) sqrt(π/(2 Q_res))`, H.
pub fn feedline_mutual_inductance(res: &ResonatorParams) -> f64 {
    let wr = 2.0 * PI * res.omega_res;
    res.z0 / wr * (PI / (2.0 * res.quality_factor())).sqrt()
}

/// Input impedance of the quarter-wave resonator loaded by the feedline.
///
/// The cotangent form is multiplied through by `sin(πω/2ω_res)` so the result
/// stays finite where the cotangent diverges.
pub fn purcell_impedance(res: &ResonatorParams, f: f64) -> Result<Complex<f64>> {
    if !(f > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "impedance needs a positive frequency, got {f}"
        )));
    }
    let z0 = res.z0;
    let m = feedline_mutual_inductance(res);
    let omega = 2.0 * PI * f;
    let a = omega * omega * m * m;
    let x = PI * f / (2.0 * res.omega_res);
    let (s, c) = x.sin_cos();
    let num = Complex::new(a * c, 2.0 * z0 * z0 * s);
    let den = Complex::new(2.0 * z0 * z0 * c, a * s);
    Ok(num / den * z0)
}

/// Emission through the readout resonator into the feedline, set by `t_res`.
pub fn rate_purcell(spec: &Spectrum, res: &ResonatorParams, env: &Environment, i: usize, j: usize) -> Result<f64> {
    let p = pair(spec, i, j)?;
    let omega = 2.0 * PI * p.f;
    let ratio = coupling_capacitance(res, spec.params.c_sigma()) / spec.params.c_sigma();
    let re_z = purcell_impedance(res, p.f)?.re;
    let amplitude =
        8.0 * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * omega / HBAR * ratio * ratio * spec.n_sq(p.i, p.j) * re_z;
    Ok(amplitude * thermal_split(&p, env.t_res))
}

/// `Γ_{i→j}` for one channel.
pub fn mechanism_rate(
    spec: &Spectrum,
    res: &ResonatorParams,
    env: &Environment,
    mechanism: Mechanism,
    i: usize,
    j: usize,
) -> Result<f64> {
    match mechanism {
        Mechanism::Capacitive => rate_capacitive(spec, env, i, j),
        Mechanism::FluxNoise => rate_flux_noise(spec, env, i, j),
        Mechanism::QpJunction => rate_quasiparticle(spec, env, i, j, QpSite::Junction),
        Mechanism::QpArray => rate_quasiparticle(spec, env, i, j, QpSite::Array),
        Mechanism::ChargeLine => rate_radiative(spec, env, i, j, DriveLine::Charge),
        Mechanism::FluxLine => rate_radiative(spec, env, i, j, DriveLine::Flux),
        Mechanism::Purcell => rate_purcell(spec, res, env, i, j),
    }
}

/// Fill every off-diagonal entry of the rate table for one channel.
pub fn build_mechanism_table(
    spec: &Spectrum,
    res: &ResonatorParams,
    env: &Environment,
    mechanism: Mechanism,
) -> Result<MechanismRateTable> {
    let n = spec.n_levels;
    let mut rates = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rates[(i, j)] = mechanism_rate(spec, res, env, mechanism, i, j).map_err(|e| Error::AtPair {
                    i,
                    j,
                    source: Box::new(e),
                })?;
            }
        }
    }
    Ok(MechanismRateTable { mechanism, rates })
}
