use std::path::{Path, PathBuf};

use fluxonium_relax::analysis::{
    device_jj_participation, run_pipeline, ExclusionConfig, PipelineConfig, T1Dataset, T1Record,
};
use fluxonium_relax::dynamics::{ModelConfig, PredictionMode, T1Model};
use fluxonium_relax::io::DeviceFile;
use fluxonium_relax::{Device, FluxBias, Mechanism};

const QUBITS: [&str; 8] = ["a1", "a2", "a3", "a4", "a5", "b1", "b2", "b3"];

fn device_path(id: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/devices/{id}.json"))
}

fn device(id: &str) -> Device {
    DeviceFile::read(&device_path(id)).unwrap().to_device().unwrap()
}

fn synthetic(device: &Device, flux: &[f64], qc: impl Fn(usize) -> f64) -> T1Dataset {
    let records = flux
        .iter()
        .enumerate()
        .map(|(k, &phi)| {
            let model = T1Model::new(
                device.params,
                &device.resonator,
                &device.env,
                FluxBias(phi),
                &Mechanism::ANALYSIS,
                &ModelConfig::default(),
            )
            .unwrap();
            T1Record::new(phi, model.predict(qc(k), PredictionMode::MultilevelSignal).unwrap())
        })
        .collect();
    T1Dataset {
        qubit_id: device.qubit_id.clone(),
        records,
    }
}

fn keep_everything() -> PipelineConfig {
    PipelineConfig {
        exclusion: ExclusionConfig {
            threshold: 1.0,
            ..ExclusionConfig::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn widely_spaced_records_round_trip() {
    let a1 = device("a1");
    let flux = [0.05, 0.12, 0.2, 0.28, 0.36, 0.44];
    let qcs = [1.2e5, 2.0e5, 3.5e5, 5e5, 8e5, 2.5e5];
    let ds = synthetic(&a1, &flux, |k| qcs[k]);
    let out = run_pipeline(&ds, &a1, &keep_everything()).unwrap();
    assert_eq!(out.binned.len(), flux.len());
    assert!(out.dropped.is_empty() && out.failures.is_empty());
    for (entry, qc) in out.distribution.entries.iter().zip(qcs) {
        assert!(((entry.qceff - qc) / qc).abs() < 1e-3, "{} vs {qc}", entry.qceff);
    }
}

#[test]
fn pipeline_is_deterministic() {
    let b1 = device("b1");
    let flux: Vec<f64> = (0..8).map(|k| 0.08 + 0.05 * k as f64).collect();
    let ds = synthetic(&b1, &flux, |k| 2e5 + 3e4 * k as f64);
    let config = PipelineConfig::default();
    let first = run_pipeline(&ds, &b1, &config).unwrap();
    let second = run_pipeline(&ds, &b1, &config).unwrap();
    assert_eq!(first.distribution, second.distribution);
    assert_eq!(first.kept, second.kept);
}

#[test]
fn close_frequencies_share_a_bin() {
    let a1 = device("a1");
    // mirror images about half flux have the same frequency
    let flux = [0.497, 0.503, 0.2];
    let ds = synthetic(&a1, &flux, |_| 3e5);
    let out = run_pipeline(&ds, &a1, &keep_everything()).unwrap();
    assert_eq!(out.binned.len(), 2);
    assert_eq!(out.binned.records[0].n_binned, 2);
    assert_eq!(out.binned.records[1].n_binned, 1);
}

#[test]
fn lowering_the_threshold_never_keeps_more() {
    let a4 = device("a4");
    let flux: Vec<f64> = (0..12).map(|k| 0.02 + 0.04 * k as f64).collect();
    let ds = synthetic(&a4, &flux, |k| if k % 2 == 0 { 1.5e5 } else { 6e5 });
    let mut previous = 0;
    for threshold in [0.0, 0.02, 0.05, 0.1, 0.3, 1.0] {
        let config = PipelineConfig {
            exclusion: ExclusionConfig {
                threshold,
                ..ExclusionConfig::default()
            },
            ..PipelineConfig::default()
        };
        let kept = run_pipeline(&ds, &a4, &config).unwrap().kept.len();
        assert!(kept >= previous, "threshold {threshold} kept {kept} < {previous}");
        previous = kept;
    }
    assert_eq!(previous, flux.len());
}

#[test]
fn junction_participation_in_design_band() {
    for id in QUBITS {
        let file = DeviceFile::read(&device_path(id)).unwrap();
        let d = file.to_device().unwrap();
        let p = device_jj_participation(d.params, file.junction_area_um2.unwrap()).unwrap();
        assert!((0.11..=0.18).contains(&p), "{id}: {p}");
    }
}
