//! Energy-relaxation modeling for fluxonium qubits.
//!
//! The crate is organized bottom-up:
//!
//! - [`hamiltonian`]: spectrum and matrix elements of the fluxonium circuit.
//! - [`resonator`]: dispersive shifts and readout response of the coupled resonator.
//! - [`loss`]: Fermi-golden-rule transition rates for each loss mechanism.
//! - [`dynamics`]: multilevel rate-matrix evolution, synthetic decay signals and T1 fits.
//! - [`analysis`]: turning measured T1 data into effective capacitive quality factors.
//! - [`stats`]: Welch's t-test and the special functions behind it.
//! - [`io`]: device files, CSV datasets, JSON outputs and run reports.

pub mod analysis;
pub mod constants;
pub mod dynamics;
mod error;
pub mod hamiltonian;
pub mod io;
pub mod loss;
pub mod optimize;
pub mod resonator;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use hamiltonian::{diagonalize, FluxBias, FluxoniumParams, Spectrum};
pub use loss::{Environment, Mechanism};
pub use resonator::ResonatorParams;

/// Everything needed to evaluate rates for one physical qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub qubit_id: String,
    pub params: FluxoniumParams,
    pub resonator: ResonatorParams,
    pub env: Environment,
}
