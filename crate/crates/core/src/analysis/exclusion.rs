use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{T1Dataset, T1Record};
use crate::dynamics::{ModelConfig, PredictionMode, T1Model};
use crate::hamiltonian::FluxBias;
use crate::loss::Mechanism;
use crate::{Device, Error, Result};

/// How the non-capacitive decay rate of a record is predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionRates {
    /// `1/T1` of the multilevel population decay.
    Multilevel,
    /// `Γ01 + Γ10`.
    TwoLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionConfig {
    /// Largest tolerated share of the measured rate explained by the excluded channels.
    pub threshold: f64,
    pub rates: ExclusionRates,
    pub mechanisms: Vec<Mechanism>,
    pub model: ModelConfig,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            rates: ExclusionRates::Multilevel,
            mechanisms: Mechanism::EXCLUSION.to_vec(),
            model: ModelConfig::default(),
        }
    }
}

/// Combined decay rate of the configured non-capacitive channels, 1/s.
pub fn excluded_channel_rate(device: &Device, phi_ext: f64, config: &ExclusionConfig) -> Result<f64> {
    if config.mechanisms.contains(&Mechanism::Capacitive) {
        return Err(Error::InvalidParameter(
            "the capacitive channel cannot be an exclusion channel".into(),
        ));
    }
    let model = T1Model::new(
        device.params,
        &device.resonator,
        &device.env,
        FluxBias::new(phi_ext)?,
        &config.mechanisms,
        &config.model,
    )?;
    if model.rates(1.0).amax() == 0.0 {
        return Ok(0.0);
    }
    let mode = match config.rates {
        ExclusionRates::Multilevel => PredictionMode::MultilevelPopulation,
        ExclusionRates::TwoLevel => PredictionMode::TwoLevel,
    };
    Ok(1.0 / model.predict(1.0, mode)?)
}

/// Split `ds` into records kept and records whose non-capacitive share of
/// `1/T1` exceeds the threshold. Record order is preserved in both parts.
pub fn exclusion_filter(ds: &T1Dataset, device: &Device, config: &ExclusionConfig) -> Result<(T1Dataset, T1Dataset)> {
    if !(config.threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exclusion threshold must be nonnegative, got {}",
            config.threshold
        )));
    }
    let shares = ds
        .records
        .par_iter()
        .enumerate()
        .map(|(k, r)| {
            excluded_channel_rate(device, r.phi_ext, config)
                .map(|rate| rate * r.t1)
                .map_err(|e| Error::at_grid(k, e))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (kept, dropped): (Vec<(T1Record, f64)>, Vec<(T1Record, f64)>) = ds
        .records
        .iter()
        .copied()
        .zip(shares)
        .partition(|(_, share)| *share <= config.threshold);
    let strip = |v: Vec<(T1Record, f64)>| T1Dataset {
        qubit_id: ds.qubit_id.clone(),
        records: v.into_iter().map(|(r, _)| r).collect(),
    };
    Ok((strip(kept), strip(dropped)))
}
