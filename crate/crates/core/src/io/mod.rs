//! Device files, CSV datasets and the versioned JSON documents written by the
//! command-line front end.
//!
//! Every file carries its units: JSON keys end in a unit suffix and CSV
//! headers name the unit of each column. All writes go through a temporary
//! file and an atomic rename.

mod device;
mod documents;
mod fs;
mod tables;

pub use device::{DeviceFile, ReportedValues, REQUIRED_DEVICE_KEYS};
pub use documents::{
    build_report, combined_digest, json_bytes, read_json, welch_matrix, write_json, CompareDocument, DecayDocument,
    DecayPoint, EpsilonDocument, ErrorDocument, FluxNoiseDocument, InputDigest, PipelineCounts, QceffDocument,
    QubitSummary, RunConfig, RunReport, WelchEntry, SCHEMA_COMPARE, SCHEMA_DECAY, SCHEMA_EPSILON, SCHEMA_ERROR,
    SCHEMA_FLUX_NOISE, SCHEMA_QCEFF, SCHEMA_REPORT,
};
pub use fs::{read_bytes, read_text, sha256_hex, write_atomic};
pub use tables::{
    format_f64, read_dephasing_csv, read_t1_csv, t1_csv_bytes, write_dephasing_csv, write_t1_csv, CsvTable,
};
