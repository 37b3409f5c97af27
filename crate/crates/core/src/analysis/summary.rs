use serde::{Deserialize, Serialize};

use crate::hamiltonian::FluxoniumParams;
use crate::stats::{mean, sample_variance};
use crate::{Error, Result};

/// Junction capacitance per area, F/μm².
pub const JUNCTION_SPECIFIC_CAPACITANCE: f64 = 49e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation.
    pub std: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary statistics; a single value is rejected since its spread is undefined.
pub fn summarize(values: &[f64]) -> Result<DistributionSummary> {
    summarize_with(values, false)
}

/// As [`summarize`], optionally reporting a zero spread for a single value.
pub fn summarize_with(values: &[f64], allow_singleton: bool) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::Undefined("empty distribution".into()));
    }
    if values.len() == 1 && !allow_singleton {
        return Err(Error::Undefined("standard deviation of a single value".into()));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("distribution holds non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    Ok(DistributionSummary {
        mean: mean(values),
        median: quantile(&sorted, 0.5),
        std: if values.len() > 1 {
            sample_variance(values).sqrt()
        } else {
            0.0
        },
        q1,
        q3,
        iqr: q3 - q1,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        n: values.len(),
    })
}

/// Share of the total capacitance carried by the small junction.
pub fn jj_participation(junction_area_um2: f64, c_sigma: f64) -> Result<f64> {
    jj_participation_with(junction_area_um2, c_sigma, JUNCTION_SPECIFIC_CAPACITANCE)
}

pub fn jj_participation_with(junction_area_um2: f64, c_sigma: f64, specific_capacitance: f64) -> Result<f64> {
    let p = junction_area_um2 * specific_capacitance / c_sigma;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "junction participation {p} outside (0, 1]"
        )));
    }
    Ok(p)
}

/// Junction participation of a device from its charging energy.
pub fn device_jj_participation(params: FluxoniumParams, junction_area_um2: f64) -> Result<f64> {
    jj_participation(junction_area_um2, params.c_sigma())
}

/// Junction quality factor from `1/Q_eff = p/Q_JJ + (1 − p)/Q_other`.
/// `q_other` may be infinite.
pub fn map_qjj(qceff: f64, p_jj: f64, q_other: f64) -> Result<f64> {
    if !(p_jj > 0.0 && p_jj <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "junction participation {p_jj} outside (0, 1]"
        )));
    }
    if !(qceff > 0.0) || !(q_other > 0.0) {
        return Err(Error::InvalidParameter("quality factors must be positive".into()));
    }
    let residual = 1.0 / qceff - (1.0 - p_jj) / q_other;
    if !(residual > 0.0) {
        return Err(Error::Undefined(format!(
            "Q_other = {q_other:e} alone limits below Q_eff = {qceff:e}"
        )));
    }
    Ok(p_jj / residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn four_values() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert_relative_eq!(s.std, (5.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.std, 1.29099, max_relative = 1e-5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert_eq!(s.iqr, 1.5);
    }

    #[test]
    fn singleton_policy() {
        assert!(summarize(&[2.0]).is_err());
        let s = summarize_with(&[2.0], true).unwrap();
        assert_eq!((s.mean, s.median, s.std), (2.0, 2.0, 0.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn symmetric_mean_equals_median() {
        let s = summarize(&[1.0, 2.0, 4.0, 6.0, 7.0]).unwrap();
        assert_eq!(s.mean, s.median);
    }

    #[test]
    fn junction_limits() {
        assert_relative_eq!(
            map_qjj(3e5, 0.15, f64::INFINITY).unwrap(),
            0.15 * 3e5,
            max_relative = 1e-15
        );
        assert_relative_eq!(map_qjj(3e5, 1.0, 1e6).unwrap(), 3e5, max_relative = 1e-15);
        assert!(map_qjj(3e5, 0.0, 1e6).is_err());
        assert!(map_qjj(3e5, 0.5, 1e5).is_err());
        assert!(jj_participation(10.0, 20e-15).is_err());
    }

    #[test]
    fn participation_oracle() {
        // 0.06 μm² at 49 fF/μm² over 20 fF
        assert_relative_eq!(jj_participation(0.06, 20e-15).unwrap(), 0.147, max_relative = 1e-12);
    }
}
