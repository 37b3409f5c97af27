use nalgebra::{Complex, DMatrix};

use super::RateMatrix;
use crate::constants::reduced_energy;
use crate::hamiltonian::Spectrum;
use crate::{Error, Result};

/// Tolerance on the probability sum before a row is renormalized.
pub const PROBABILITY_DRIFT: f64 = 1e-9;

/// Populations sampled at `times`, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub populations: DMatrix<f64>,
    pub initial: Vec<f64>,
    /// Set when any row drifted from unit sum and was renormalized.
    pub renormalized: bool,
}

impl PopulationTrace {
    /// Population of `level` over time.
    pub fn level(&self, level: usize) -> Vec<f64> {
        self.populations.column(level).iter().copied().collect()
    }
}

/// Boltzmann populations of the levels in `spec` at `temperature`.
pub fn thermal_population(spec: &Spectrum, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let e0 = spec.energies[0];
    let w: Vec<f64> = spec
        .energies
        .iter()
        .map(|&e| (-reduced_energy(e - e0, temperature)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Swap the populations of levels 0 and 1.
pub fn invert_computational(p: &[f64]) -> Result<Vec<f64>> {
    if p.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "population vector needs at least 2 entries, got {}",
            p.len()
        )));
    }
    let mut q = p.to_vec();
    q.swap(0, 1);
    Ok(q)
}

pub(crate) fn check_probability(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= -1e-12) || !x.is_finite()) || (sum - 1.0).abs() > PROBABILITY_DRIFT {
        return Err(Error::InvalidParameter(format!("not a probability vector (sum {sum})")));
    }
    Ok(())
}

/// `p(τ) = V e^{Λτ} V⁻¹ p0` at each requested time.
pub fn evolve(rm: &RateMatrix, p0: &[f64], times: &[f64]) -> Result<PopulationTrace> {
    check_probability(p0)?;
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "times must be finite and nonnegative, got {t}"
        )));
    }
    let c = rm.coefficients(p0)?;
    let n = rm.n;
    let mut populations = DMatrix::zeros(times.len(), n);
    let mut renormalized = false;
    for (row, &t) in times.iter().enumerate() {
        if t == 0.0 {
            for i in 0..n {
                populations[(row, i)] = p0[i];
            }
            continue;
        }
        let weights: Vec<Complex<f64>> = rm
            .eigenvalues
            .iter()
            .zip(c.iter())
            .map(|(l, ck)| (l * t).exp() * ck)
            .collect();
        let mut sum = 0.0;
        for i in 0..n {
            let v: Complex<f64> = (0..n).map(|k| rm.eigenvectors[(i, k)] * weights[k]).sum();
            populations[(row, i)] = v.re;
            sum += v.re;
        }
        if (sum - 1.0).abs() > PROBABILITY_DRIFT {
            renormalized = true;
            for i in 0..n {
                populations[(row, i)] /= sum;
            }
        }
    }
    if renormalized {
        log::warn!("population trace drifted from unit norm and was renormalized");
    }
    Ok(PopulationTrace {
        times: times.to_vec(),
        populations,
        initial: p0.to_vec(),
        renormalized,
    })
}

/// `count` logarithmically spaced times over `[start, stop]`.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{diagonalize, FluxBias, FluxoniumParams};
    use approx::assert_relative_eq;

    fn b1_spec() -> Spectrum {
        diagonalize(FluxoniumParams::new(3.15e9, 1.04e9, 0.50e9).unwrap(), FluxBias(0.5), 6).unwrap()
    }

    #[test]
    fn thermal_limits() {
        let spec = b1_spec();
        let cold = thermal_population(&spec, 1e-6).unwrap();
        assert!((cold[0] - 1.0).abs() < 1e-12);
        assert!(cold[1..].iter().all(|&x| x < 1e-12));
        let p = thermal_population(&spec, 0.040).unwrap();
        let expected = (-6.62607015e-34 * spec.omega01() / (1.380649e-23 * 0.040)).exp();
        assert_relative_eq!(p[1] / p[0], expected, max_relative = 1e-12);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert!(thermal_population(&spec, 0.0).is_err());
    }

    #[test]
    fn degenerate_levels_share_population() {
        let mut spec = b1_spec();
        spec.energies[1] = spec.energies[0];
        let p = thermal_population(&spec, 0.05).unwrap();
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn inversion_is_an_involution() {
        assert_eq!(invert_computational(&[1.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        let p = thermal_population(&b1_spec(), 0.040).unwrap();
        let q = invert_computational(&p).unwrap();
        assert_eq!(invert_computational(&q).unwrap(), p);
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert!(invert_computational(&[1.0]).is_err());
    }

    #[test]
    fn evolution_endpoints() {
        let r = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.1, 4.0, 0.0, 2.0, 0.5, 9.0, 0.0]);
        let rm = RateMatrix::from_rates(&r).unwrap();
        let p0 = [0.0, 0.0, 1.0];
        let trace = evolve(&rm, &p0, &[0.0, 1e-3, 1.0, 1e3]).unwrap();
        assert_eq!(trace.level(2)[0], 1.0);
        let pi = rm.stationary();
        for i in 0..3 {
            assert!((trace.populations[(3, i)] - pi[i]).abs() < 1e-12);
        }
        for row in trace.populations.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!(!trace.renormalized);
        assert!(evolve(&rm, &[0.5, 0.2, 0.2], &[1.0]).is_err());
        assert!(evolve(&rm, &p0, &[-1.0]).is_err());
    }

    #[test]
    fn log_grid() {
        let g = log_spaced(1e-6, 1e-2, 5);
        assert_eq!(g.len(), 5);
        assert_relative_eq!(g[0], 1e-6, max_relative = 1e-14);
        assert_relative_eq!(g[2], 1e-4, max_relative = 1e-12);
        assert_relative_eq!(g[4], 1e-2, max_relative = 1e-14);
    }
}
