use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{diagonalize, FluxBias, FluxoniumParams};
use crate::{Error, Result};

fn one() -> usize {
    1
}

/// One measured T1 value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Record {
    /// Flux bias, Φ0.
    pub phi_ext: f64,
    /// Qubit frequency, Hz.
    pub omega01: Option<f64>,
    /// Seconds.
    pub t1: f64,
    pub t1_err: Option<f64>,
    /// Number of raw measurements averaged into this record.
    #[serde(default = "one")]
    pub n_binned: usize,
}

impl T1Record {
    pub fn new(phi_ext: f64, t1: f64) -> Self {
        Self {
            phi_ext,
            omega01: None,
            t1,
            t1_err: None,
            n_binned: 1,
        }
    }

    pub fn with_frequency(mut self, omega01: f64) -> Self {
        self.omega01 = Some(omega01);
        self
    }

    pub fn with_error(mut self, t1_err: f64) -> Self {
        self.t1_err = Some(t1_err);
        self
    }

    /// Error bars larger than twice the value mark unreliable fits.
    pub fn is_unreliable(&self) -> bool {
        matches!(self.t1_err, Some(e) if e > 2.0 * self.t1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Dataset {
    pub qubit_id: String,
    pub records: Vec<T1Record>,
}

impl T1Dataset {
    /// Validate records and drop unreliable ones. Returns the dataset and the
    /// number of records dropped.
    pub fn ingest(qubit_id: impl Into<String>, records: Vec<T1Record>) -> Result<(Self, usize)> {
        for (k, r) in records.iter().enumerate() {
            let freq_ok = r.omega01.is_none_or(|f| f.is_finite() && f > 0.0);
            let err_ok = r.t1_err.is_none_or(|e| e.is_finite() && e >= 0.0);
            if !(r.t1 > 0.0 && r.t1.is_finite() && r.phi_ext.is_finite() && freq_ok && err_ok) {
                return Err(Error::InvalidParameter(format!("record {k} is invalid: {r:?}")));
            }
        }
        let total = records.len();
        let kept: Vec<T1Record> = records.into_iter().filter(|r| !r.is_unreliable()).collect();
        let dropped = total - kept.len();
        if dropped > 0 {
            log::info!("dropped {dropped} of {total} records with error bars above twice the value");
        }
        Ok((
            Self {
                qubit_id: qubit_id.into(),
                records: kept,
            },
            dropped,
        ))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fill in missing qubit frequencies from the circuit model.
    pub fn with_frequencies(&self, params: FluxoniumParams) -> Result<Self> {
        let records = self
            .records
            .par_iter()
            .enumerate()
            .map(|(k, r)| match r.omega01 {
                Some(_) => Ok(*r),
                None => diagonalize(params, FluxBias(r.phi_ext), 2)
                    .map(|s| r.with_frequency(s.omega01()))
                    .map_err(|e| Error::at_grid(k, e)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            qubit_id: self.qubit_id.clone(),
            records,
        })
    }

    fn frequency(&self, k: usize) -> Result<f64> {
        self.records[k]
            .omega01
            .ok_or_else(|| Error::InvalidParameter(format!("record {k} has no qubit frequency")))
    }
}

/// Average records falling in the same `[k·w, (k+1)·w)` frequency bin.
///
/// Bins are emitted in order of their first record. Merged records carry the
/// mean frequency, mean T1 and the mean of the folded flux biases.
pub fn bin_average(ds: &T1Dataset, bin_width: f64) -> Result<T1Dataset> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut bins: Vec<(i64, Vec<usize>)> = Vec::new();
    for k in 0..ds.len() {
        let idx = (ds.frequency(k)? / bin_width).floor() as i64;
        match bins.iter_mut().find(|(b, _)| *b == idx) {
            Some((_, members)) => members.push(k),
            None => bins.push((idx, vec![k])),
        }
    }
    let records = bins
        .into_iter()
        .map(|(_, members)| {
            if members.len() == 1 {
                return ds.records[members[0]];
            }
            let m = members.len() as f64;
            let avg = |f: &dyn Fn(&T1Record) -> f64| members.iter().map(|&k| f(&ds.records[k])).sum::<f64>() / m;
            T1Record {
                phi_ext: avg(&|r| FluxBias(r.phi_ext).folded().0),
                omega01: Some(avg(&|r| r.omega01.unwrap_or(0.0))),
                t1: avg(&|r| r.t1),
                t1_err: None,
                n_binned: members.iter().map(|&k| ds.records[k].n_binned).sum(),
            }
        })
        .collect();
    Ok(T1Dataset {
        qubit_id: ds.qubit_id.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(f: f64, t1: f64) -> T1Record {
        T1Record::new(0.3, t1).with_frequency(f)
    }

    #[test]
    fn ingest_drops_wide_error_bars() {
        let records = vec![
            rec(1e9, 100e-6).with_error(300e-6),
            rec(1e9, 100e-6).with_error(200e-6),
            rec(1e9, 100e-6),
        ];
        let (ds, dropped) = T1Dataset::ingest("q", records).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(ds.len(), 2);
        assert!(T1Dataset::ingest("q", vec![rec(1e9, -1.0)]).is_err());
    }

    #[test]
    fn spaced_records_pass_through() {
        let ds = T1Dataset {
            qubit_id: "q".into(),
            records: vec![rec(300e6, 1e-4), rec(320e6, 2e-4), rec(200e6, 3e-4)],
        };
        assert_eq!(bin_average(&ds, 8e6).unwrap(), ds);
    }

    #[test]
    fn pair_in_one_bin_is_averaged() {
        let ds = T1Dataset {
            qubit_id: "q".into(),
            records: vec![rec(401e6, 100e-6), rec(403e6, 200e-6), rec(500e6, 1e-4)],
        };
        let out = bin_average(&ds, 8e6).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.records[0].t1 - 150e-6).abs() < 1e-18);
        assert_eq!(out.records[0].omega01, Some(402e6));
        assert_eq!(out.records[0].n_binned, 2);
        assert_eq!(out.records[1], ds.records[2]);
    }

    #[test]
    fn bins_are_anchored_at_zero() {
        let ds = T1Dataset {
            qubit_id: "q".into(),
            records: vec![rec(7.9e6, 1e-4), rec(8.1e6, 1e-4)],
        };
        assert_eq!(bin_average(&ds, 8e6).unwrap().len(), 2);
    }

    #[test]
    fn missing_frequency_is_an_error() {
        let ds = T1Dataset {
            qubit_id: "q".into(),
            records: vec![T1Record::new(0.3, 1e-4)],
        };
        assert!(bin_average(&ds, 8e6).is_err());
        let filled = ds
            .with_frequencies(FluxoniumParams::new(3.15e9, 1.04e9, 0.5e9).unwrap())
            .unwrap();
        assert!(bin_average(&filled, 8e6).is_ok());
    }
}
