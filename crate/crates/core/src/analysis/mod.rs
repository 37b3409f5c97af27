//! From measured T1 data to effective capacitive quality factors.
//!
//! A dataset is binned in qubit frequency, records dominated by
//! non-capacitive channels are excluded, and every surviving record is
//! inverted through the loss model for `qc_eff`.

mod dataset;
mod exclusion;
mod flux_noise;
mod qceff;
mod summary;

pub use dataset::{bin_average, T1Dataset, T1Record};
pub use exclusion::{excluded_channel_rate, exclusion_filter, ExclusionConfig, ExclusionRates};
pub use flux_noise::{
    extract_flux_noise_amplitude, DephasingDataset, DephasingRecord, FluxNoiseFit, SWEET_SPOT_WINDOW,
};
pub use qceff::{
    epsilon_grid, extract_distribution, extract_qceff, extract_qceff_with_model, fit_epsilon_global, two_level_qceff,
    EpsilonScan, ExtractionConfig, ExtractionFailure, QceffDistribution, QceffEntry, QceffFit,
};
pub use summary::{
    device_jj_participation, jj_participation, jj_participation_with, map_qjj, quantile, summarize, summarize_with,
    DistributionSummary, JUNCTION_SPECIFIC_CAPACITANCE,
};

use serde::{Deserialize, Serialize};

use crate::{Device, Result};

pub const DEFAULT_BIN_WIDTH: f64 = 8e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Hz.
    pub bin_width: f64,
    pub exclusion: ExclusionConfig,
    pub extraction: ExtractionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bin_width: DEFAULT_BIN_WIDTH,
            exclusion: ExclusionConfig::default(),
            extraction: ExtractionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub binned: T1Dataset,
    pub kept: T1Dataset,
    pub dropped: T1Dataset,
    pub distribution: QceffDistribution,
    pub failures: Vec<ExtractionFailure>,
}

/// Bin, filter and invert one qubit's dataset.
pub fn run_pipeline(ds: &T1Dataset, device: &Device, config: &PipelineConfig) -> Result<PipelineOutput> {
    let binned = bin_average(&ds.with_frequencies(device.params)?, config.bin_width)?;
    let (kept, dropped) = exclusion_filter(&binned, device, &config.exclusion)?;
    let (distribution, failures) = extract_distribution(&kept, device, &config.extraction);
    Ok(PipelineOutput {
        binned,
        kept,
        dropped,
        distribution,
        failures,
    })
}
