use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{evolve, fit_exponential, invert_computational, log_spaced, thermal_population};
use super::{DecayFit, PopulationTrace, RateMatrix};
use crate::hamiltonian::{diagonalize, FluxBias, FluxoniumParams, Spectrum};
use crate::loss::{build_mechanism_table, Environment, Mechanism};
use crate::resonator::{dressed_response, ResonatorParams};
use crate::{Error, Result};

/// How a T1 value is obtained from the loss model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// `1/Σ (Γ01 + Γ10)` over the selected channels.
    TwoLevel,
    /// Exponential fit to the decay of `p1`.
    MultilevelPopulation,
    /// Exponential fit to the dispersive readout signal.
    MultilevelSignal,
}

impl PredictionMode {
    pub fn name(self) -> &'static str {
        match self {
            PredictionMode::TwoLevel => "two_level",
            PredictionMode::MultilevelPopulation => "multilevel_population",
            PredictionMode::MultilevelSignal => "multilevel_signal",
        }
    }
}

/// Numerical settings of the multilevel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Levels in the rate equations.
    pub n_levels: usize,
    /// Extra levels kept only for the dispersive-shift sums.
    pub chi_extra_levels: usize,
    pub grid_points: usize,
    /// Grid spans `[T/start_divisor, stop_multiple·T]` around the dominant decay time `T`.
    pub grid_start_divisor: f64,
    pub grid_stop_multiple: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_levels: 6,
            chi_extra_levels: 4,
            grid_points: 51,
            grid_start_divisor: 50.0,
            grid_stop_multiple: 8.0,
        }
    }
}

impl ModelConfig {
    pub fn with_levels(n_levels: usize) -> Self {
        Self {
            n_levels,
            ..Self::default()
        }
    }
}

/// Share of the initial state outside the stationary and dominant decay modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialnessReport {
    pub m: f64,
    pub delta: Vec<f64>,
    pub dominant_index: usize,
    /// `−Re γ` of the dominant mode, 1/s.
    pub dominant_rate: f64,
}

/// `δ = p0 − c0 v0 − c_k v_k` with `k` the non-stationary mode of largest `|c_k|²`.
pub fn exponentialness(rm: &RateMatrix, p0: &[f64]) -> Result<ExponentialnessReport> {
    let c = rm.coefficients(p0)?;
    let weight: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
    let best = weight[1..].iter().cloned().fold(0.0, f64::max);
    let tied: Vec<usize> = (1..rm.n)
        .filter(|&i| (weight[i] - best).abs() <= 1e-12 * best)
        .collect();
    if tied.len() > 1 {
        return Err(Error::DominantModeTie(tied));
    }
    let k = tied[0];
    let delta: Vec<f64> = if rm.n == 2 {
        vec![0.0; 2]
    } else {
        (0..rm.n)
            .map(|i| (p0[i] - c[0] * rm.eigenvectors[(i, 0)] - c[k] * rm.eigenvectors[(i, k)]).re)
            .collect()
    };
    let m = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(ExponentialnessReport {
        m,
        delta,
        dominant_index: k,
        dominant_rate: -rm.eigenvalues[k].re,
    })
}

/// Sampling times around the dominant decay time of `p0` under `rm`.
pub fn decay_time_grid(rm: &RateMatrix, p0: &[f64], config: &ModelConfig) -> Result<Vec<f64>> {
    let rate = match exponentialness(rm, p0) {
        Ok(report) => report.dominant_rate,
        Err(Error::DominantModeTie(_)) => rm.slowest_rate(),
        Err(e) => return Err(e),
    };
    if !(rate > 0.0) {
        return Err(Error::Eigendecomposition(format!(
            "dominant rate {rate} is not positive"
        )));
    }
    let t = 1.0 / rate;
    Ok(log_spaced(
        t / config.grid_start_divisor,
        config.grid_stop_multiple * t,
        config.grid_points,
    ))
}

/// Thermal state at `temperature` with levels 0 and 1 exchanged.
pub fn inverted_thermal_state(spec: &Spectrum, n_levels: usize, temperature: f64) -> Result<Vec<f64>> {
    invert_computational(&thermal_population(&spec.truncated(n_levels)?, temperature)?)
}

/// Readout weights `Re{S21_rot,i}` for the lowest `n` levels.
pub fn readout_weights(spec: &Spectrum, res: &ResonatorParams, n: usize) -> Result<Vec<f64>> {
    let response = dressed_response(spec, res)?;
    Ok(response.readout_weights()[..n].to_vec())
}

/// `s(τ) = |Σ_i p_i(τ) w_i|`
pub fn readout_signal(trace: &PopulationTrace, weights: &[f64]) -> Vec<f64> {
    trace
        .populations
        .row_iter()
        .map(|row| row.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>().abs())
        .collect()
}

/// Evolve the inverted thermal state and form the readout signal.
///
/// `spec` may hold more levels than `rm`; all of them enter the dispersive
/// shifts.
pub fn simulate_t1_signal(
    rm: &RateMatrix,
    spec: &Spectrum,
    res: &ResonatorParams,
    env: &Environment,
    times: &[f64],
) -> Result<(PopulationTrace, Vec<f64>)> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    let p0 = inverted_thermal_state(spec, rm.n, env.t_qubit)?;
    let weights = readout_weights(spec, res, rm.n)?;
    let trace = evolve(rm, &p0, times)?;
    let signal = readout_signal(&trace, &weights);
    Ok((trace, signal))
}

/// Relative T1 errors `(T1 − T1')/T1` when higher levels are read as ground
/// (always 0) and as excited (`T1'` fitted to `p1 + Σ_{i≥2} p_i`).
pub fn heralded_misassignment_error(
    rm: &RateMatrix,
    spec: &Spectrum,
    env: &Environment,
    times: &[f64],
) -> Result<(f64, f64)> {
    if rm.n == 2 {
        return Ok((0.0, 0.0));
    }
    let p0 = inverted_thermal_state(spec, rm.n, env.t_qubit)?;
    let trace = evolve(rm, &p0, times)?;
    let p1 = trace.level(1);
    let excited: Vec<f64> = trace
        .populations
        .row_iter()
        .map(|row| row.iter().skip(1).sum())
        .collect();
    let t1 = fit_exponential(times, &p1)?.t1;
    let t1_excited = fit_exponential(times, &excited)?.t1;
    Ok((0.0, (t1 - t1_excited) / t1))
}

/// Loss model of one qubit at one flux bias, with the rate tables cached so
/// that only the capacitive quality factor varies between evaluations.
#[derive(Debug, Clone)]
pub struct T1Model {
    /// Spectrum including the extra levels used for dispersive shifts.
    pub spectrum: Spectrum,
    pub env: Environment,
    pub config: ModelConfig,
    /// Summed rates of every selected channel except the capacitive one.
    fixed_rates: DMatrix<f64>,
    /// Capacitive rates at `qc_eff = 1`; they scale as `1/qc_eff`.
    capacitive_unit: Option<DMatrix<f64>>,
    weights: std::result::Result<Vec<f64>, String>,
    initial: Vec<f64>,
}

impl T1Model {
    pub fn new(
        params: FluxoniumParams,
        res: &ResonatorParams,
        env: &Environment,
        bias: FluxBias,
        mechanisms: &[Mechanism],
        config: &ModelConfig,
    ) -> Result<Self> {
        let spectrum = diagonalize(params, bias, config.n_levels + config.chi_extra_levels)?;
        Self::from_spectrum(spectrum, res, env, mechanisms, config)
    }

    /// Build from a spectrum holding at least `config.n_levels` levels.
    pub fn from_spectrum(
        spectrum: Spectrum,
        res: &ResonatorParams,
        env: &Environment,
        mechanisms: &[Mechanism],
        config: &ModelConfig,
    ) -> Result<Self> {
        env.validate()?;
        res.validate()?;
        if mechanisms.is_empty() {
            return Err(Error::InvalidParameter("no loss mechanisms selected".into()));
        }
        let n = config.n_levels;
        let rate_spec = spectrum.truncated(n)?;
        let mut fixed_rates = DMatrix::zeros(n, n);
        let mut capacitive_unit = None;
        let unit_env = Environment { qc_eff: 1.0, ..*env };
        let mut seen = Vec::new();
        for &m in mechanisms {
            if seen.contains(&m) {
                continue;
            }
            seen.push(m);
            if m == Mechanism::Capacitive {
                capacitive_unit = Some(build_mechanism_table(&rate_spec, res, &unit_env, m)?.rates);
            } else {
                fixed_rates += build_mechanism_table(&rate_spec, res, env, m)?.rates;
            }
        }
        let weights = readout_weights(&spectrum, res, n).map_err(|e| e.to_string());
        let initial = inverted_thermal_state(&spectrum, n, env.t_qubit)?;
        Ok(Self {
            spectrum,
            env: *env,
            config: *config,
            fixed_rates,
            capacitive_unit,
            weights,
            initial,
        })
    }

    pub fn rates(&self, qc_eff: f64) -> DMatrix<f64> {
        match &self.capacitive_unit {
            Some(unit) => &self.fixed_rates + unit / qc_eff,
            None => self.fixed_rates.clone(),
        }
    }

    pub fn rate_matrix(&self, qc_eff: f64) -> Result<RateMatrix> {
        if !(qc_eff > 0.0 && qc_eff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quality factor must be positive, got {qc_eff}"
            )));
        }
        RateMatrix::from_rates(&self.rates(qc_eff))
    }

    /// `(Γ01 + Γ10)` of the non-capacitive channels and of the capacitive
    /// channel at `qc_eff = 1`.
    pub fn two_level_components(&self) -> (f64, f64) {
        let other = self.fixed_rates[(0, 1)] + self.fixed_rates[(1, 0)];
        let cap = self
            .capacitive_unit
            .as_ref()
            .map(|u| u[(0, 1)] + u[(1, 0)])
            .unwrap_or(0.0);
        (other, cap)
    }

    pub fn has_capacitive(&self) -> bool {
        self.capacitive_unit.is_some()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial
    }

    pub fn weights(&self) -> Result<&[f64]> {
        self.weights.as_deref().map_err(|e| {
            Error::InvalidParameter(format!(
                "readout weights unavailable at flux {}: {e}",
                self.spectrum.bias.0
            ))
        })
    }

    /// Fitted decay of the chosen observable, with its time grid.
    pub fn decay(&self, qc_eff: f64, mode: PredictionMode) -> Result<(Vec<f64>, Vec<f64>, DecayFit)> {
        let rm = self.rate_matrix(qc_eff)?;
        let times = decay_time_grid(&rm, &self.initial, &self.config)?;
        let trace = evolve(&rm, &self.initial, &times)?;
        let observable = match mode {
            PredictionMode::MultilevelSignal => readout_signal(&trace, self.weights()?),
            _ => trace.level(1),
        };
        let fit = fit_exponential(&times, &observable)?;
        Ok((times, observable, fit))
    }

    pub fn predict(&self, qc_eff: f64, mode: PredictionMode) -> Result<f64> {
        match mode {
            PredictionMode::TwoLevel => {
                let (other, cap) = self.two_level_components();
                let total = other + cap / qc_eff;
                if total > 0.0 {
                    Ok(1.0 / total)
                } else {
                    Err(Error::InvalidParameter("no 0<->1 relaxation channel".into()))
                }
            }
            _ => Ok(self.decay(qc_eff, mode)?.2.t1),
        }
    }
}

/// Everything a synthetic T1 measurement at one bias point produces.
#[derive(Debug, Clone)]
pub struct DecayDiagnostics {
    pub trace: PopulationTrace,
    pub signal: Vec<f64>,
    pub population_fit: DecayFit,
    pub signal_fit: DecayFit,
    /// Relative T1 errors with higher levels read as ground and as excited.
    pub misassignment: (f64, f64),
    pub exponentialness: ExponentialnessReport,
}

impl DecayDiagnostics {
    /// `(T1_p1 − T1_signal)/T1_p1`
    pub fn signal_error(&self) -> f64 {
        (self.population_fit.t1 - self.signal_fit.t1) / self.population_fit.t1
    }
}

impl T1Model {
    pub fn diagnostics(&self, qc_eff: f64) -> Result<DecayDiagnostics> {
        let rm = self.rate_matrix(qc_eff)?;
        let exponentialness = exponentialness(&rm, &self.initial)?;
        let times = decay_time_grid(&rm, &self.initial, &self.config)?;
        let trace = evolve(&rm, &self.initial, &times)?;
        let signal = readout_signal(&trace, self.weights()?);
        let population_fit = fit_exponential(&times, &trace.level(1))?;
        let signal_fit = fit_exponential(&times, &signal)?;
        let misassignment = heralded_misassignment_error(&rm, &self.spectrum, &self.env, &times)?;
        Ok(DecayDiagnostics {
            trace,
            signal,
            population_fit,
            signal_fit,
            misassignment,
            exponentialness,
        })
    }
}

/// Predicted T1 of one qubit at one bias point, seconds.
pub fn predicted_t1(
    params: FluxoniumParams,
    res: &ResonatorParams,
    env: &Environment,
    bias: FluxBias,
    mode: PredictionMode,
    mechanisms: &[Mechanism],
    config: &ModelConfig,
) -> Result<f64> {
    T1Model::new(params, res, env, bias, mechanisms, config)?.predict(env.qc_eff, mode)
}
