//! Multilevel relaxation: the rate-matrix generator, population evolution,
//! synthetic readout signals and single-exponential T1 extraction.

mod evolution;
mod fit;
mod model;
mod rate_matrix;

pub use evolution::{evolve, invert_computational, log_spaced, thermal_population, PopulationTrace};
pub use fit::{fit_exponential, DecayFit};
pub use model::{
    decay_time_grid, exponentialness, heralded_misassignment_error, inverted_thermal_state, predicted_t1,
    readout_signal, readout_weights, simulate_t1_signal, DecayDiagnostics, ExponentialnessReport, ModelConfig,
    PredictionMode, T1Model,
};
pub use rate_matrix::{build_rate_matrix, RateMatrix};
