use std::path::Path;

use super::fs::{read_bytes, write_atomic};
use crate::analysis::{DephasingDataset, DephasingRecord, T1Dataset, T1Record};
use crate::{Error, Result};

/// Column name and the unit suffix it must carry.
struct Column {
    name: &'static str,
    quantity: &'static str,
    required: bool,
}

const T1_COLUMNS: [Column; 4] = [
    Column {
        name: "phi_ext",
        quantity: "phi_ext",
        required: true,
    },
    Column {
        name: "t1_s",
        quantity: "t1",
        required: true,
    },
    Column {
        name: "omega01_hz",
        quantity: "omega01",
        required: false,
    },
    Column {
        name: "t1_err_s",
        quantity: "t1_err",
        required: false,
    },
];

const DEPHASING_COLUMNS: [Column; 3] = [
    Column {
        name: "phi_ext",
        quantity: "phi_ext",
        required: true,
    },
    Column {
        name: "gamma_phi_e_per_s",
        quantity: "gamma_phi_e",
        required: true,
    },
    Column {
        name: "slope_rad_per_s_per_phi0",
        quantity: "slope",
        required: false,
    },
];

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message,
    }
}

/// Map each known column to its position, rejecting unknown columns and wrong units.
fn locate(path: &Path, headers: &csv::StringRecord, columns: &[Column]) -> Result<Vec<Option<usize>>> {
    let mut found = vec![None; columns.len()];
    for (pos, h) in headers.iter().enumerate() {
        if let Some(k) = columns.iter().position(|c| c.name == h) {
            if found[k].is_some() {
                return Err(parse_error(path, format!("duplicate column `{h}`")));
            }
            found[k] = Some(pos);
            continue;
        }
        // longest quantity prefix wins so `t1_err_us` is not read as a `t1` column
        let quantity = columns
            .iter()
            .filter(|c| h.starts_with(&format!("{}_", c.quantity)))
            .max_by_key(|c| c.quantity.len());
        return Err(parse_error(
            path,
            match quantity {
                Some(c) => format!("column `{h}` has the wrong unit, expected `{}`", c.name),
                None => format!("unknown column `{h}`"),
            },
        ));
    }
    let missing: Vec<&str> = columns
        .iter()
        .zip(&found)
        .filter(|(c, f)| c.required && f.is_none())
        .map(|(c, _)| c.name)
        .collect();
    if !missing.is_empty() {
        return Err(parse_error(path, format!("missing columns: {}", missing.join(", "))));
    }
    Ok(found)
}

/// Parse each row into optional floats in column order.
fn read_rows(path: &Path, columns: &[Column]) -> Result<Vec<Vec<Option<f64>>>> {
    let bytes = read_bytes(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, format!("unreadable header: {e}")))?
        .clone();
    let positions = locate(path, &headers, columns)?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let row_no = k + 1;
        let rec = rec.map_err(|e| parse_error(path, format!("data row {row_no}: {e}")))?;
        let mut values = Vec::with_capacity(columns.len());
        for (c, pos) in columns.iter().zip(&positions) {
            let cell = pos.and_then(|p| rec.get(p)).unwrap_or("");
            if cell.is_empty() {
                if c.required {
                    return Err(parse_error(path, format!("data row {row_no}: empty `{}`", c.name)));
                }
                values.push(None);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                parse_error(
                    path,
                    format!("data row {row_no}: `{}` = {cell:?} is not a number", c.name),
                )
            })?;
            values.push(Some(v));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_error(path, "no data rows".into()));
    }
    Ok(rows)
}

/// Read a T1 table. Records with error bars above twice the value are
/// dropped; the second element is how many.
pub fn read_t1_csv(path: &Path, qubit_id: &str) -> Result<(T1Dataset, usize)> {
    let rows = read_rows(path, &T1_COLUMNS)?;
    let records = rows
        .into_iter()
        .map(|v| T1Record {
            phi_ext: v[0].unwrap_or_default(),
            t1: v[1].unwrap_or_default(),
            omega01: v[2],
            t1_err: v[3],
            n_binned: 1,
        })
        .collect();
    T1Dataset::ingest(qubit_id, records).map_err(|e| parse_error(path, e.to_string()))
}

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e16)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn t1_csv_bytes(ds: &T1Dataset) -> Vec<u8> {
    let mut table = CsvTable::new(&["phi_ext", "omega01_hz", "t1_s", "t1_err_s"]);
    for r in &ds.records {
        table.push(vec![
            format_f64(r.phi_ext),
            cell(r.omega01),
            format_f64(r.t1),
            cell(r.t1_err),
        ]);
    }
    table.to_bytes()
}

pub fn write_t1_csv(path: &Path, ds: &T1Dataset) -> Result<()> {
    write_atomic(path, &t1_csv_bytes(ds))
}

pub fn read_dephasing_csv(path: &Path, qubit_id: &str) -> Result<DephasingDataset> {
    let rows = read_rows(path, &DEPHASING_COLUMNS)?;
    let records = rows
        .into_iter()
        .map(|v| DephasingRecord {
            phi_ext: v[0].unwrap_or_default(),
            gamma_phi_e: v[1].unwrap_or_default(),
            slope: v[2],
        })
        .collect();
    Ok(DephasingDataset {
        qubit_id: qubit_id.to_string(),
        records,
    })
}

pub fn write_dephasing_csv(path: &Path, ds: &DephasingDataset) -> Result<()> {
    let mut table = CsvTable::new(&["phi_ext", "gamma_phi_e_per_s", "slope_rad_per_s_per_phi0"]);
    for r in &ds.records {
        table.push(vec![format_f64(r.phi_ext), format_f64(r.gamma_phi_e), cell(r.slope)]);
    }
    write_atomic(path, &table.to_bytes())
}

/// A flat table with a mandatory header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = T1Dataset {
            qubit_id: "q".into(),
            records: vec![
                T1Record::new(0.1234567890123, 1.0 / 3.0 * 1e-4).with_frequency(3.62e8 + 1.0 / 7.0),
                T1Record::new(0.5, 123.456e-6).with_error(1e-5),
                T1Record::new(-0.25, f64::MIN_POSITIVE * 1e10),
            ],
        };
        let p = dir.path().join("t1.csv");
        write_t1_csv(&p, &ds).unwrap();
        let (back, dropped) = read_t1_csv(&p, "q").unwrap();
        assert_eq!(dropped, 0);
        assert_eq!(back, ds);
    }

    #[test]
    fn number_format_round_trips() {
        for x in [
            0.0,
            -0.5,
            1e-30,
            4.48e-31,
            3.62e8,
            1e16,
            123.456e-6,
            f64::INFINITY,
            f64::MAX,
        ] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(1.5e-7), "1.5e-7");
    }

    #[test]
    fn drops_wide_error_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "phi_ext,t1_s,t1_err_s\n0.3,1e-4,3e-4\n0.4,1e-4,1e-5\n");
        let (ds, dropped) = read_t1_csv(&p, "q").unwrap();
        assert_eq!((ds.len(), dropped), (1, 1));
        assert_eq!(ds.records[0].omega01, None);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "phi_ext,t1_s\n0.3,1e-4\n0.4,abc\n");
        let msg = read_t1_csv(&p, "q").unwrap_err().to_string();
        assert!(msg.contains("data row 2"), "{msg}");
    }

    #[test]
    fn unit_mismatch_and_empty_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "phi_ext,t1_us\n0.3,100\n");
        let msg = read_t1_csv(&p, "q").unwrap_err().to_string();
        assert!(msg.contains("wrong unit"), "{msg}");
        let p = write(&dir, "b.csv", "phi_ext,t1_s,t1_err_us\n0.3,1e-4,1\n");
        let msg = read_t1_csv(&p, "q").unwrap_err().to_string();
        assert!(msg.contains("expected `t1_err_s`"), "{msg}");
        let p = write(&dir, "c.csv", "phi_ext,t1_s\n");
        assert!(read_t1_csv(&p, "q").is_err());
    }

    #[test]
    fn dephasing_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = DephasingDataset {
            qubit_id: "q".into(),
            records: vec![
                DephasingRecord {
                    phi_ext: 0.3,
                    gamma_phi_e: 1.5e4,
                    slope: None,
                },
                DephasingRecord {
                    phi_ext: 0.31,
                    gamma_phi_e: 1.7e4,
                    slope: Some(-2.5e10),
                },
            ],
        };
        let p = dir.path().join("d.csv");
        write_dephasing_csv(&p, &ds).unwrap();
        assert_eq!(read_dephasing_csv(&p, "q").unwrap(), ds);
    }
}
