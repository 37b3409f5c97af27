use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::fs::{read_bytes, read_text, sha256_hex, write_atomic};
use crate::analysis::{
    summarize, DistributionSummary, EpsilonScan, ExtractionFailure, FluxNoiseFit, QceffDistribution,
};
use crate::dynamics::PredictionMode;
use crate::stats::{ci_of_mean_difference, mean, welch_t_test};
use crate::{Error, Result};

pub const SCHEMA_QCEFF: &str = "fluxonium-relax/qceff-distribution/v1";
pub const SCHEMA_EPSILON: &str = "fluxonium-relax/epsilon-scan/v1";
pub const SCHEMA_FLUX_NOISE: &str = "fluxonium-relax/flux-noise/v1";
pub const SCHEMA_COMPARE: &str = "fluxonium-relax/welch-matrix/v1";
pub const SCHEMA_REPORT: &str = "fluxonium-relax/run-report/v1";
pub const SCHEMA_DECAY: &str = "fluxonium-relax/decay-summary/v1";
pub const SCHEMA_ERROR: &str = "fluxonium-relax/error/v1";

/// Content hash of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&read_bytes(path)?),
        })
    }
}

/// Digest over the ordered content hashes of several inputs.
pub fn combined_digest(inputs: &[InputDigest]) -> String {
    let joined: Vec<&str> = inputs.iter().map(|d| d.sha256.as_str()).collect();
    sha256_hex(joined.join("\n").as_bytes())
}

/// Settings that shaped a distribution, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub bin_width_hz: f64,
    pub exclusion_threshold: f64,
    pub n_levels: usize,
    pub t_qubit_k: f64,
    pub t_res_k: f64,
    pub mode: PredictionMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineCounts {
    pub n_raw: usize,
    pub n_dropped_ingest: usize,
    pub n_after_binning: usize,
    pub n_excluded: usize,
    pub n_failed: usize,
    pub n_extracted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QceffDocument {
    pub schema: String,
    pub process_label: Option<String>,
    pub distribution: QceffDistribution,
    pub config: RunConfig,
    pub counts: PipelineCounts,
    pub failures: Vec<ExtractionFailure>,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDocument {
    pub schema: String,
    pub mode: PredictionMode,
    pub qubits: Vec<String>,
    pub scan: EpsilonScan,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxNoiseDocument {
    pub schema: String,
    pub qubit_id: String,
    /// μΦ0/√Hz.
    pub sqrt_a_phi_uphi0_per_rthz: f64,
    pub fit: FluxNoiseFit,
    pub inputs: Vec<InputDigest>,
}

/// Per-flux results of a synthetic decay simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub phi_ext: f64,
    pub freq_hz: f64,
    pub t1_population_s: f64,
    pub t1_signal_s: f64,
    /// `(T1_population − T1_signal)/T1_population`.
    pub signal_error: f64,
    pub misassignment_ground: f64,
    pub misassignment_excited: f64,
    pub exponentialness: f64,
    pub dominant_rate_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDocument {
    pub schema: String,
    pub qubit_id: String,
    pub n_levels: usize,
    pub qc_eff: f64,
    pub epsilon: f64,
    pub points: Vec<DecayPoint>,
    pub inputs: Vec<InputDigest>,
}

/// One ordered pair of a pairwise Welch comparison. The interval is the
/// difference of means `row − col` as a percentage of the column mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchEntry {
    pub row: String,
    pub col: String,
    pub mean_row: f64,
    pub mean_col: f64,
    pub t0: f64,
    pub nu: f64,
    pub p_value: f64,
    pub ci_low_pct: f64,
    pub ci_high_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareDocument {
    pub schema: String,
    pub alpha: f64,
    pub labels: Vec<String>,
    pub entries: Vec<WelchEntry>,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitSummary {
    pub label: String,
    pub process_label: Option<String>,
    pub summary: DistributionSummary,
    pub config: Option<RunConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub alpha: f64,
    pub qubits: Vec<QubitSummary>,
    pub welch: Vec<WelchEntry>,
    pub inputs: Vec<InputDigest>,
    pub input_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDocument {
    pub schema: String,
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
}

/// Welch comparison of every ordered pair of samples, diagonal included.
pub fn welch_matrix(samples: &[(String, Vec<f64>)], alpha: f64) -> Result<Vec<WelchEntry>> {
    let mut out = Vec::with_capacity(samples.len() * samples.len());
    for (row, a) in samples {
        for (col, b) in samples {
            let r = welch_t_test(a, b, alpha)?;
            let (lo, hi) = ci_of_mean_difference(&r, mean(b))?;
            out.push(WelchEntry {
                row: row.clone(),
                col: col.clone(),
                mean_row: r.mean1,
                mean_col: r.mean2,
                t0: r.t0,
                nu: r.nu,
                p_value: r.p_value,
                ci_low_pct: lo,
                ci_high_pct: hi,
            });
        }
    }
    Ok(out)
}

/// Build a report from labelled samples. `meta` holds the process label and
/// run configuration of each sample.
pub fn build_report(
    samples: &[(String, Vec<f64>)],
    meta: &[(Option<String>, Option<RunConfig>)],
    alpha: f64,
    inputs: Vec<InputDigest>,
) -> Result<RunReport> {
    if samples.len() != meta.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            found: meta.len(),
        });
    }
    let qubits = samples
        .iter()
        .zip(meta)
        .map(|((label, values), (process_label, config))| {
            Ok(QubitSummary {
                label: label.clone(),
                process_label: process_label.clone(),
                summary: summarize(values)?,
                config: config.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport {
        schema: SCHEMA_REPORT.into(),
        alpha,
        qubits,
        welch: welch_matrix(samples, alpha)?,
        input_digest: combined_digest(&inputs),
        inputs,
    })
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(doc).expect("documents serialize");
    v.push(b'\n');
    v
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    write_atomic(path, &json_bytes(doc))
}

/// Read a document, checking its `schema` field first.
pub fn read_json<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<T> {
    let text = read_text(path)?;
    let parse_err = |message: String| Error::Parse {
        path: path.display().to_string(),
        message,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(s) if s == schema => {}
        Some(s) => return Err(parse_err(format!("schema `{s}` where `{schema}` was expected"))),
        None => return Err(parse_err("missing `schema` field".into())),
    }
    serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))
}
