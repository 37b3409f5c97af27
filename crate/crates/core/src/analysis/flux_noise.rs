use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{flux_dispersion, FluxBias, FluxoniumParams};
use crate::{Error, Result};

/// Records closer than this to half flux are treated as sweet-spot points.
pub const SWEET_SPOT_WINDOW: f64 = 1e-3;

/// Echo dephasing rate measured at one flux bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingRecord {
    pub phi_ext: f64,
    /// 1/s.
    pub gamma_phi_e: f64,
    /// `dω01/dΦ_ext`, rad/s per Φ0. Computed from the circuit model when absent.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingDataset {
    pub qubit_id: String,
    pub records: Vec<DephasingRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxNoiseFit {
    /// `sqrt(A_Φ)`, Φ0/√Hz.
    pub sqrt_a_phi: f64,
    /// Slope of `Γ_φ^E` against `|dω01/dΦ_ext|`.
    pub slope: f64,
    pub n_used: usize,
}

/// Fit `Γ_φ^E = |dω01/dΦ_ext| sqrt(A_Φ ln 2)` through the origin.
pub fn extract_flux_noise_amplitude(ds: &DephasingDataset, params: FluxoniumParams) -> Result<FluxNoiseFit> {
    let usable: Vec<&DephasingRecord> = ds
        .records
        .iter()
        .filter(|r| (FluxBias(r.phi_ext).folded().0 - 0.5).abs() > SWEET_SPOT_WINDOW)
        .collect();
    if usable.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 records away from half flux, got {}",
            usable.len()
        )));
    }
    let points = usable
        .par_iter()
        .map(|r| {
            let s = match r.slope {
                Some(s) => s,
                None => flux_dispersion(params, FluxBias::new(r.phi_ext)?)?,
            };
            Ok((s.abs(), r.gamma_phi_e))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    if !(sxx > 0.0) {
        return Err(Error::Undefined("flux dispersion vanishes at every record".into()));
    }
    let slope = sxy / sxx;
    Ok(FluxNoiseFit {
        sqrt_a_phi: slope / std::f64::consts::LN_2.sqrt(),
        slope,
        n_used: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn b1() -> FluxoniumParams {
        FluxoniumParams::new(3.15e9, 1.04e9, 0.50e9).unwrap()
    }

    fn dataset(noise: impl Fn(usize) -> f64) -> DephasingDataset {
        let sqrt_a = 5.2e-6;
        let records = (0..20)
            .map(|k| {
                let phi = 0.30 + 0.01 * k as f64;
                let slope = flux_dispersion(b1(), FluxBias(phi)).unwrap();
                DephasingRecord {
                    phi_ext: phi,
                    gamma_phi_e: slope.abs() * (sqrt_a * sqrt_a * std::f64::consts::LN_2).sqrt() * noise(k),
                    slope: None,
                }
            })
            .collect();
        DephasingDataset {
            qubit_id: "B1".into(),
            records,
        }
    }

    #[test]
    fn noiseless_recovery() {
        let fit = extract_flux_noise_amplitude(&dataset(|_| 1.0), b1()).unwrap();
        assert_relative_eq!(fit.sqrt_a_phi, 5.2e-6, max_relative = 1e-9);
        assert_eq!(fit.n_used, 20);
    }

    #[test]
    fn zero_rates_give_zero() {
        let fit = extract_flux_noise_amplitude(&dataset(|_| 0.0), b1()).unwrap();
        assert_eq!(fit.sqrt_a_phi, 0.0);
    }

    #[test]
    fn noisy_recovery() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let normal = Normal::new(1.0, 0.1).unwrap();
        let factors: Vec<f64> = (0..20).map(|_| normal.sample(&mut rng)).collect();
        let fit = extract_flux_noise_amplitude(&dataset(|k| factors[k]), b1()).unwrap();
        assert!((fit.sqrt_a_phi / 5.2e-6 - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn sweet_spot_records_are_ignored() {
        let ds = DephasingDataset {
            qubit_id: "B1".into(),
            records: vec![
                DephasingRecord {
                    phi_ext: 0.5,
                    gamma_phi_e: 1e4,
                    slope: None,
                },
                DephasingRecord {
                    phi_ext: 1.5,
                    gamma_phi_e: 1e4,
                    slope: None,
                },
            ],
        };
        assert!(extract_flux_noise_amplitude(&ds, b1()).is_err());
    }
}
