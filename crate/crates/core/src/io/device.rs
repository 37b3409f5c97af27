use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fs::read_text;
use crate::loss::Environment;
use crate::{Device, Error, FluxoniumParams, ResonatorParams, Result};

/// Values reported alongside the fitted parameters, kept for regression checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportedValues {
    pub omega01_ghz: Option<f64>,
    pub chi01_mhz: Option<f64>,
    pub t1_us: Option<f64>,
}

/// Device description as stored on disk. Every key carries its unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub qubit_id: String,
    pub process_label: String,
    pub ej_ghz: f64,
    pub ec_ghz: f64,
    pub el_ghz: f64,
    pub omega_res_ghz: f64,
    pub g_mhz: f64,
    pub kappa_mhz: f64,
    pub sqrt_a_phi_uphi0_per_rthz: f64,
    #[serde(default = "default_n_array")]
    pub n_array: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction_area_um2: Option<f64>,
    #[serde(default = "default_c_drive")]
    pub c_drive_f: f64,
    #[serde(default = "default_m_drive")]
    pub m_drive_wb_per_a: f64,
    #[serde(default = "default_t_qubit")]
    pub t_qubit_k: f64,
    #[serde(default = "default_t_res")]
    pub t_res_k: f64,
    #[serde(default)]
    pub x_qp: f64,
    #[serde(default = "default_gap")]
    pub gap_ghz: f64,
    #[serde(default = "default_alpha")]
    pub flux_noise_alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<ReportedValues>,
}

fn default_n_array() -> u32 {
    151
}
fn default_c_drive() -> f64 {
    Environment::default().c_drive
}
fn default_m_drive() -> f64 {
    Environment::default().m_drive
}
fn default_t_qubit() -> f64 {
    0.040
}
fn default_t_res() -> f64 {
    0.065
}
fn default_gap() -> f64 {
    44.0
}
fn default_alpha() -> f64 {
    1.0
}

pub const REQUIRED_DEVICE_KEYS: [&str; 9] = [
    "qubit_id",
    "process_label",
    "ej_ghz",
    "ec_ghz",
    "el_ghz",
    "omega_res_ghz",
    "g_mhz",
    "kappa_mhz",
    "sqrt_a_phi_uphi0_per_rthz",
];

impl DeviceFile {
    /// Parse from JSON text. `origin` labels diagnostics.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        };
        let value: serde_json::Value = if text.trim().is_empty() {
            serde_json::Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(parse_err)?
        };
        if let Some(obj) = value.as_object() {
            let missing: Vec<String> = REQUIRED_DEVICE_KEYS
                .iter()
                .filter(|k| !obj.contains_key(**k))
                .map(|k| k.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingKeys(missing));
            }
        }
        // Typed parse from the text, so duplicate and unknown keys report a location.
        let file: DeviceFile = serde_json::from_str(text).map_err(parse_err)?;
        for w in file.plausibility_warnings() {
            log::warn!("{origin}: {w}");
        }
        file.to_device()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device file serializes") + "\n"
    }

    /// Values outside the usual range for these devices.
    pub fn plausibility_warnings(&self) -> Vec<String> {
        let checks = [
            ("ej_ghz", self.ej_ghz, 0.1, 100.0),
            ("ec_ghz", self.ec_ghz, 0.05, 20.0),
            ("el_ghz", self.el_ghz, 0.01, 20.0),
            ("omega_res_ghz", self.omega_res_ghz, 1.0, 20.0),
            ("g_mhz", self.g_mhz, 1.0, 1000.0),
            ("kappa_mhz", self.kappa_mhz, 0.001, 100.0),
            ("sqrt_a_phi_uphi0_per_rthz", self.sqrt_a_phi_uphi0_per_rthz, 0.0, 100.0),
            ("t_qubit_k", self.t_qubit_k, 0.005, 1.0),
            ("t_res_k", self.t_res_k, 0.005, 1.0),
        ];
        checks
            .iter()
            .filter(|(_, v, lo, hi)| !(v > lo && v < hi))
            .map(|(k, v, lo, hi)| format!("{k} = {v} outside the plausible range ({lo}, {hi})"))
            .collect()
    }

    pub fn params(&self) -> Result<FluxoniumParams> {
        FluxoniumParams::new(self.ej_ghz * 1e9, self.ec_ghz * 1e9, self.el_ghz * 1e9)
    }

    pub fn resonator(&self) -> Result<ResonatorParams> {
        ResonatorParams::new(self.omega_res_ghz * 1e9, self.g_mhz * 1e6, self.kappa_mhz * 1e6)
    }

    /// Environment with the default `qc_eff` and `epsilon`.
    pub fn environment(&self) -> Result<Environment> {
        let a = self.sqrt_a_phi_uphi0_per_rthz * 1e-6;
        let env = Environment {
            t_qubit: self.t_qubit_k,
            t_res: self.t_res_k,
            a_phi: a * a,
            alpha: self.flux_noise_alpha,
            x_qp: self.x_qp,
            gap: self.gap_ghz * 1e9,
            c_drive: self.c_drive_f,
            m_drive: self.m_drive_wb_per_a,
            n_array: self.n_array,
            ..Environment::default()
        };
        env.validate()?;
        Ok(env)
    }

    pub fn to_device(&self) -> Result<Device> {
        Ok(Device {
            qubit_id: self.qubit_id.clone(),
            params: self.params()?,
            resonator: self.resonator()?,
            env: self.environment()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A1: &str = r#"{
        "qubit_id": "A1",
        "process_label": "A",
        "ej_ghz": 3.54,
        "ec_ghz": 1.05,
        "el_ghz": 0.53,
        "omega_res_ghz": 7.090,
        "g_mhz": 124,
        "kappa_mhz": 0.25,
        "sqrt_a_phi_uphi0_per_rthz": 10.4
    }"#;

    #[test]
    fn parses_table_row() {
        let d = DeviceFile::from_json(A1, "a1.json").unwrap().to_device().unwrap();
        assert_eq!(d.params, FluxoniumParams::new(3.54e9, 1.05e9, 0.53e9).unwrap());
        assert_eq!(d.env.n_array, 151);
        assert!((d.env.a_phi - (10.4e-6f64).powi(2)).abs() < 1e-24);
    }

    #[test]
    fn empty_file_lists_every_key() {
        match DeviceFile::from_json("", "x.json") {
            Err(Error::MissingKeys(k)) => assert_eq!(k.len(), REQUIRED_DEVICE_KEYS.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_key_has_location() {
        let text = A1.replace("\"el_ghz\": 0.53,", "\"el_ghz\": 0.53,\n \"el_ghz\": 0.5,");
        match DeviceFile::from_json(&text, "x.json") {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("duplicate field"), "{message}");
                assert!(message.contains("line"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_unit_key_is_rejected() {
        let text = A1.replace("\"kappa_mhz\": 0.25", "\"kappa_mhz\": 0.25, \"kappa_khz\": 250");
        assert!(matches!(DeviceFile::from_json(&text, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn implausible_values_warn_only() {
        let text = A1.replace("3.54", "150");
        let f = DeviceFile::from_json(&text, "x").unwrap();
        assert_eq!(f.plausibility_warnings().len(), 1);
    }
}
