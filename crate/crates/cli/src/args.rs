use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluxonium_relax::analysis::ExclusionRates;
use fluxonium_relax::dynamics::PredictionMode;
use fluxonium_relax::Mechanism;

#[derive(Debug, Parser)]
#[command(
    name = "fluxrelax",
    version,
    about = "Fluxonium T1 modeling and effective quality-factor analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energies and matrix elements over a flux grid (CSV).
    Spectrum(SpectrumArgs),
    /// Predicted T1 per loss channel and model (CSV).
    PredictT1(PredictArgs),
    /// Synthetic decay traces, readout signals and misassignment errors.
    SimulateDecay(SimulateArgs),
    /// Effective quality factors from a measured T1 dataset (JSON).
    ExtractQceff(ExtractArgs),
    /// Global fit of the quality-factor frequency exponent (JSON).
    FitEpsilon(EpsilonArgs),
    /// Flux-noise amplitude from echo dephasing rates (JSON).
    FitFluxNoise(FluxNoiseArgs),
    /// Pairwise Welch comparison of distributions (JSON).
    Compare(CompareArgs),
    /// Summary statistics and pairwise comparisons in one report (JSON).
    Report(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    TwoLevel,
    MultilevelPopulation,
    MultilevelSignal,
}

impl From<Mode> for PredictionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::TwoLevel => PredictionMode::TwoLevel,
            Mode::MultilevelPopulation => PredictionMode::MultilevelPopulation,
            Mode::MultilevelSignal => PredictionMode::MultilevelSignal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExclusionModel {
    Multilevel,
    TwoLevel,
}

impl From<ExclusionModel> for ExclusionRates {
    fn from(m: ExclusionModel) -> Self {
        match m {
            ExclusionModel::Multilevel => ExclusionRates::Multilevel,
            ExclusionModel::TwoLevel => ExclusionRates::TwoLevel,
        }
    }
}

/// `start:stop:count`, inclusive and evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FluxRange {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

pub fn parse_flux_range(s: &str) -> Result<FluxRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:count".into());
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let count: usize = parts[2].trim().parse().map_err(|e| format!("{:?}: {e}", parts[2]))?;
    if count == 0 {
        return Err("count must be at least 1".into());
    }
    Ok(FluxRange {
        start: num(parts[0])?,
        stop: num(parts[1])?,
        count,
    })
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = true)]
pub struct FluxArgs {
    /// Flux bias points in units of Φ0.
    #[arg(long, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true)]
    pub flux: Vec<f64>,
    /// Evenly spaced flux grid, `start:stop:count`.
    #[arg(long, value_parser = parse_flux_range, allow_hyphen_values = true)]
    pub flux_range: Option<FluxRange>,
}

impl FluxArgs {
    pub fn grid(&self) -> Vec<f64> {
        let mut g = self.flux.clone();
        if let Some(r) = self.flux_range {
            g.extend(r.points());
        }
        g
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Levels in the rate equations.
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Effective capacitive quality factor at 6 GHz.
    #[arg(long, default_value_t = 3e5)]
    pub qc_eff: f64,
    /// Frequency exponent of the capacitive quality factor.
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Qubit temperature in K [default: device file value, else 0.040].
    #[arg(long)]
    pub qubit_temp_k: Option<f64>,
    /// Resonator temperature in K [default: device file value, else 0.065].
    #[arg(long)]
    pub res_temp_k: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub device: PathBuf,
    #[command(flatten)]
    pub flux: FluxArgs,
    #[arg(long, default_value_t = 6)]
    pub levels: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub device: PathBuf,
    #[command(flatten)]
    pub flux: FluxArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Loss channels, each predicted alone and all of them together.
    #[arg(long, value_delimiter = ',', default_values_t = Mechanism::ALL.to_vec())]
    pub mechanisms: Vec<Mechanism>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Mode::TwoLevel, Mode::MultilevelPopulation])]
    pub modes: Vec<Mode>,
    /// Also write the combined prediction as a T1 dataset CSV.
    #[arg(long)]
    pub t1_csv: Option<PathBuf>,
    /// Model used for the dataset written by `--t1-csv`.
    #[arg(long, value_enum, default_value_t = Mode::MultilevelSignal)]
    pub dataset_mode: Mode,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub device: PathBuf,
    #[command(flatten)]
    pub flux: FluxArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_values_t = Mechanism::ANALYSIS.to_vec())]
    pub mechanisms: Vec<Mechanism>,
    /// Population and signal traces (CSV).
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Per-flux summary (JSON); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Mode::MultilevelSignal)]
    pub mode: Mode,
    #[arg(long, default_value_t = 8e6)]
    pub bin_width_hz: f64,
    #[arg(long, default_value_t = 0.1)]
    pub exclusion_threshold: f64,
    #[arg(long, value_enum, default_value_t = ExclusionModel::Multilevel)]
    pub exclusion_rates: ExclusionModel,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub device: PathBuf,
    /// T1 dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EpsilonArgs {
    /// Device files, paired in order with `--data`.
    #[arg(long, required = true)]
    pub device: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps_step: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FluxNoiseArgs {
    #[arg(long)]
    pub device: PathBuf,
    /// Dephasing CSV with `phi_ext` and `gamma_phi_e_per_s`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Distribution files written by `extract-qceff`.
    #[arg(long)]
    pub dist: Vec<PathBuf>,
    /// Pooled distributions, `LABEL=a.json,b.json`.
    #[arg(long)]
    pub pool: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
