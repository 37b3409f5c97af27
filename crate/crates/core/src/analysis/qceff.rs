use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{T1Dataset, T1Record};
use crate::dynamics::{ModelConfig, PredictionMode, T1Model};
use crate::hamiltonian::{diagonalize, FluxBias, Spectrum};
use crate::loss::{Environment, Mechanism};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::stats::{mean, sample_variance};
use crate::{Device, Error, Result};

/// Extracted quality factors above this are reported as unbounded.
const MAX_LOG10_QC: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub mode: PredictionMode,
    /// Channels in the forward model, including the capacitive one.
    pub mechanisms: Vec<Mechanism>,
    pub model: ModelConfig,
    /// First simplex vertex, and the relative offset of the second one.
    pub initial_qc: f64,
    pub initial_spread: f64,
    /// Convergence on the simplex size in `log10(qc_eff)`.
    pub log10_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            mode: PredictionMode::MultilevelSignal,
            mechanisms: Mechanism::ANALYSIS.to_vec(),
            model: ModelConfig::default(),
            initial_qc: 3e5,
            initial_spread: 0.5,
            log10_tolerance: (1.0 + 1e-7f64).log10(),
            max_iterations: 500,
        }
    }
}

impl ExtractionConfig {
    pub fn with_mode(mode: PredictionMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QceffFit {
    pub qceff: f64,
    /// Model T1 at the extracted quality factor, seconds.
    pub predicted_t1: f64,
    pub iterations: usize,
}

/// `qc = Γ_cap(qc = 1) / (1/T1 − Γ_other)` for the two-level pair rates.
pub fn two_level_qceff(model: &T1Model, t1: f64) -> Result<f64> {
    let (other, cap) = model.two_level_components();
    let excess = 1.0 / t1 - other;
    if cap <= 0.0 {
        return Err(Error::InvalidParameter("model has no capacitive channel".into()));
    }
    if !(excess > 0.0) {
        return Err(Error::Undefined(format!(
            "T1 of {t1:e} s exceeds the non-capacitive limit {:e} s",
            1.0 / other
        )));
    }
    Ok(cap / excess)
}

/// Invert `model` for the quality factor reproducing `t1`, by simplex
/// minimization of the squared relative T1 mismatch over `log10(qc_eff)`.
pub fn extract_qceff_with_model(model: &T1Model, t1: f64, config: &ExtractionConfig) -> Result<QceffFit> {
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(Error::InvalidParameter(format!("T1 must be positive, got {t1}")));
    }
    if !model.has_capacitive() {
        return Err(Error::InvalidParameter("model has no capacitive channel".into()));
    }
    if config.mode == PredictionMode::TwoLevel {
        two_level_qceff(model, t1)?;
    }
    let cost = |x: &[f64]| {
        if x[0] > MAX_LOG10_QC + 1.0 {
            return f64::INFINITY;
        }
        match model.predict(10f64.powf(x[0]), config.mode) {
            Ok(pred) => ((pred - t1) / t1).powi(2),
            Err(_) => f64::NAN,
        }
    };
    let x0 = config.initial_qc.log10();
    let x1 = (config.initial_qc * (1.0 + config.initial_spread)).log10();
    let options = NelderMeadOptions {
        max_iterations: config.max_iterations,
        x_tolerance: config.log10_tolerance,
    };
    let min = nelder_mead(cost, &[vec![x0], vec![x1]], &options)?;
    let log_qc = min.x[0];
    if !(log_qc.is_finite() && log_qc < MAX_LOG10_QC) {
        return Err(Error::Undefined(format!(
            "no finite quality factor reproduces T1 = {t1:e} s"
        )));
    }
    let qceff = 10f64.powf(log_qc);
    Ok(QceffFit {
        qceff,
        predicted_t1: model.predict(qceff, config.mode)?,
        iterations: min.iterations,
    })
}

/// Extract the effective quality factor of one record.
pub fn extract_qceff(record: &T1Record, device: &Device, config: &ExtractionConfig) -> Result<QceffFit> {
    let model = T1Model::new(
        device.params,
        &device.resonator,
        &device.env,
        FluxBias::new(record.phi_ext)?,
        &config.mechanisms,
        &config.model,
    )?;
    extract_qceff_with_model(&model, record.t1, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QceffEntry {
    /// Qubit frequency, Hz.
    pub freq: f64,
    pub phi_ext: f64,
    pub qceff: f64,
    pub n_binned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QceffDistribution {
    pub qubit_id: String,
    pub epsilon_used: f64,
    pub mode: PredictionMode,
    pub entries: Vec<QceffEntry>,
}

impl QceffDistribution {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.qceff).collect()
    }
}

/// A record for which no quality factor could be extracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionFailure {
    pub index: usize,
    pub phi_ext: f64,
    pub message: String,
}

/// Extract every record of `ds` in parallel. Entries keep the record order.
pub fn extract_distribution(
    ds: &T1Dataset,
    device: &Device,
    config: &ExtractionConfig,
) -> (QceffDistribution, Vec<ExtractionFailure>) {
    let results: Vec<Result<QceffEntry>> = ds
        .records
        .par_iter()
        .map(|r| {
            let model = T1Model::new(
                device.params,
                &device.resonator,
                &device.env,
                FluxBias::new(r.phi_ext)?,
                &config.mechanisms,
                &config.model,
            )?;
            let fit = extract_qceff_with_model(&model, r.t1, config)?;
            Ok(QceffEntry {
                freq: r.omega01.unwrap_or_else(|| model.spectrum.omega01()),
                phi_ext: r.phi_ext,
                qceff: fit.qceff,
                n_binned: r.n_binned,
            })
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(e) => entries.push(e),
            Err(e) => failures.push(ExtractionFailure {
                index,
                phi_ext: ds.records[index].phi_ext,
                message: e.to_string(),
            }),
        }
    }
    if !failures.is_empty() {
        log::warn!("{}: {} records could not be inverted", ds.qubit_id, failures.len());
    }
    (
        QceffDistribution {
            qubit_id: ds.qubit_id.clone(),
            epsilon_used: device.env.epsilon,
            mode: config.mode,
            entries,
        },
        failures,
    )
}

/// `[-1, 1]` in steps of 0.05.
pub fn epsilon_grid() -> Vec<f64> {
    (-20..=20).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub epsilons: Vec<f64>,
    /// Pooled variance of `log10(Q) − log10(mean Q)` at each grid point.
    pub variances: Vec<f64>,
    pub best: f64,
}

/// Pick the exponent of the quality-factor frequency dependence that makes
/// the extracted quality factors of every qubit most nearly frequency
/// independent.
pub fn fit_epsilon_global(
    inputs: &[(Device, T1Dataset)],
    config: &ExtractionConfig,
    grid: &[f64],
) -> Result<EpsilonScan> {
    if inputs.is_empty() || grid.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one dataset and one grid point".into(),
        ));
    }
    let spectra: Vec<Vec<Spectrum>> = inputs
        .iter()
        .map(|(dev, ds)| {
            ds.records
                .par_iter()
                .map(|r| {
                    diagonalize(
                        dev.params,
                        FluxBias::new(r.phi_ext)?,
                        config.model.n_levels + config.model.chi_extra_levels,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let variances: Vec<f64> = grid
        .par_iter()
        .map(|&epsilon| {
            let mut pooled = Vec::new();
            for ((dev, ds), specs) in inputs.iter().zip(&spectra) {
                let env = Environment { epsilon, ..dev.env };
                let q: Vec<f64> = ds
                    .records
                    .iter()
                    .zip(specs)
                    .filter_map(|(r, spec)| {
                        let model = T1Model::from_spectrum(
                            spec.clone(),
                            &dev.resonator,
                            &env,
                            &config.mechanisms,
                            &config.model,
                        )
                        .ok()?;
                        extract_qceff_with_model(&model, r.t1, config).ok().map(|f| f.qceff)
                    })
                    .collect();
                if q.is_empty() {
                    continue;
                }
                let log_mean = mean(&q).log10();
                pooled.extend(q.iter().map(|x| x.log10() - log_mean));
            }
            if pooled.len() < 2 {
                f64::INFINITY
            } else {
                sample_variance(&pooled)
            }
        })
        .collect();

    let (best_idx, _) = variances
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    if !variances[best_idx].is_finite() {
        return Err(Error::Undefined("no grid point produced a pooled variance".into()));
    }
    Ok(EpsilonScan {
        epsilons: grid.to_vec(),
        variances,
        best: grid[best_idx],
    })
}
