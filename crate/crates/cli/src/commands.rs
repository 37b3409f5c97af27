use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use fluxonium_relax::analysis::{
    bin_average, exclusion_filter, extract_flux_noise_amplitude, fit_epsilon_global, run_pipeline, ExclusionConfig,
    ExtractionConfig, PipelineConfig, T1Dataset, T1Record,
};
use fluxonium_relax::dynamics::{ModelConfig, PredictionMode, T1Model};
use fluxonium_relax::hamiltonian::spectrum_vs_flux;
use fluxonium_relax::io::{
    build_report, format_f64, json_bytes, read_dephasing_csv, read_json, read_t1_csv, welch_matrix, write_atomic,
    write_t1_csv, CompareDocument, CsvTable, DecayDocument, DecayPoint, DeviceFile, EpsilonDocument, FluxNoiseDocument,
    InputDigest, PipelineCounts, QceffDocument, RunConfig, SCHEMA_COMPARE, SCHEMA_DECAY, SCHEMA_EPSILON,
    SCHEMA_FLUX_NOISE, SCHEMA_QCEFF,
};
use fluxonium_relax::{Device, Environment, Error, FluxBias, Mechanism};
use rayon::prelude::*;

use crate::args::{
    CompareArgs, EpsilonArgs, ExtractArgs, FluxArgs, FluxNoiseArgs, ModelArgs, PipelineArgs, PredictArgs, SimulateArgs,
    SpectrumArgs,
};
use crate::error::CliError;

type CliResult<T = ()> = Result<T, CliError>;

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(p) => write_atomic(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
        }
    }
    Ok(())
}

fn load_device(path: &Path) -> CliResult<(DeviceFile, Device)> {
    let file = DeviceFile::read(path)?;
    let device = file.to_device()?;
    Ok((file, device))
}

fn flux_grid(flux: &FluxArgs) -> CliResult<Vec<FluxBias>> {
    let grid = flux.grid();
    if grid.is_empty() {
        return Err(CliError::Usage("no flux points given".into()));
    }
    Ok(grid.into_iter().map(FluxBias::new).collect::<Result<_, _>>()?)
}

/// Device environment with the command-line overrides applied.
fn environment(device: &Device, m: &ModelArgs) -> CliResult<Environment> {
    let env = Environment {
        qc_eff: m.qc_eff,
        epsilon: m.epsilon,
        t_qubit: m.qubit_temp_k.unwrap_or(device.env.t_qubit),
        t_res: m.res_temp_k.unwrap_or(device.env.t_res),
        ..device.env
    };
    env.validate()?;
    Ok(env)
}

fn with_environment(device: &Device, m: &ModelArgs) -> CliResult<Device> {
    Ok(Device {
        env: environment(device, m)?,
        ..device.clone()
    })
}

fn digests(paths: &[&Path]) -> CliResult<Vec<InputDigest>> {
    Ok(paths.iter().map(|p| InputDigest::of(p)).collect::<Result<_, _>>()?)
}

pub fn spectrum(a: &SpectrumArgs) -> CliResult {
    let (_, device) = load_device(&a.device)?;
    let grid = flux_grid(&a.flux)?;
    let spectra = spectrum_vs_flux(device.params, &grid, a.levels)?;
    let mut table = CsvTable::new(&[
        "phi_ext",
        "i",
        "j",
        "energy_i_hz",
        "energy_j_hz",
        "transition_hz",
        "n_sq",
        "phi_sq",
        "sin_half_sq",
    ]);
    for s in &spectra {
        for i in 0..s.n_levels {
            for j in i + 1..s.n_levels {
                table.push(vec![
                    format_f64(s.bias.0),
                    i.to_string(),
                    j.to_string(),
                    format_f64(s.energies[i]),
                    format_f64(s.energies[j]),
                    format_f64(s.transition(i, j)),
                    format_f64(s.n_sq(i, j)),
                    format_f64(s.phi_sq(i, j)),
                    format_f64(s.sin_half_sq(i, j)),
                ]);
            }
        }
    }
    emit(a.out.as_deref(), &table.to_bytes())
}

/// T1 of one channel set, infinite when none of its rates is nonzero.
fn channel_t1(model: &T1Model, qc_eff: f64, mode: PredictionMode) -> Result<f64, Error> {
    if model.rates(qc_eff).iter().all(|&r| r == 0.0) {
        return Ok(f64::INFINITY);
    }
    model.predict(qc_eff, mode)
}

pub fn predict_t1(a: &PredictArgs) -> CliResult {
    let (_, device) = load_device(&a.device)?;
    let env = environment(&device, &a.model)?;
    let grid = flux_grid(&a.flux)?;
    if a.mechanisms.is_empty() || a.modes.is_empty() {
        return Err(CliError::Usage(
            "at least one mechanism and one mode are required".into(),
        ));
    }
    let config = ModelConfig::with_levels(a.model.levels);
    let mut sets: Vec<(String, Vec<Mechanism>)> =
        a.mechanisms.iter().map(|m| (m.name().to_string(), vec![*m])).collect();
    sets.push(("total".into(), a.mechanisms.clone()));
    let modes: Vec<PredictionMode> = a.modes.iter().map(|&m| m.into()).collect();
    let dataset_mode: PredictionMode = a.dataset_mode.into();

    // (freq, rows, dataset t1) per flux point
    type Point = (f64, Vec<Vec<String>>, f64);
    let points: Vec<Point> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &bias)| -> Result<Point, Error> {
            let at = |e| Error::AtGridPoint {
                index: k,
                source: Box::new(e),
            };
            let mut rows = Vec::new();
            let mut freq = f64::NAN;
            let mut dataset_t1 = f64::NAN;
            for (label, mechs) in &sets {
                let model = T1Model::new(device.params, &device.resonator, &env, bias, mechs, &config).map_err(at)?;
                freq = model.spectrum.omega01();
                for &mode in &modes {
                    let t1 = channel_t1(&model, env.qc_eff, mode).map_err(at)?;
                    rows.push(vec![
                        format_f64(bias.0),
                        format_f64(freq),
                        label.clone(),
                        mode.name().to_string(),
                        format_f64(t1),
                    ]);
                }
                if label == "total" && a.t1_csv.is_some() {
                    dataset_t1 = channel_t1(&model, env.qc_eff, dataset_mode).map_err(at)?;
                }
            }
            Ok((freq, rows, dataset_t1))
        })
        .collect::<Result<_, _>>()?;

    let mut table = CsvTable::new(&["phi_ext", "freq_hz", "mechanism", "mode", "t1_s"]);
    for (_, rows, _) in &points {
        for r in rows {
            table.push(r.clone());
        }
    }
    if let Some(path) = &a.t1_csv {
        let ds = T1Dataset {
            qubit_id: device.qubit_id.clone(),
            records: grid
                .iter()
                .zip(&points)
                .map(|(b, (f, _, t1))| T1Record::new(b.0, *t1).with_frequency(*f))
                .collect(),
        };
        write_t1_csv(path, &ds)?;
    }
    emit(a.out.as_deref(), &table.to_bytes())
}

pub fn simulate_decay(a: &SimulateArgs) -> CliResult {
    let (_, device) = load_device(&a.device)?;
    let env = environment(&device, &a.model)?;
    let grid = flux_grid(&a.flux)?;
    let config = ModelConfig::with_levels(a.model.levels);
    let n = config.n_levels;

    let results: Vec<(DecayPoint, Vec<Vec<String>>)> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &bias)| -> Result<_, Error> {
            let at = |e| Error::AtGridPoint {
                index: k,
                source: Box::new(e),
            };
            let model =
                T1Model::new(device.params, &device.resonator, &env, bias, &a.mechanisms, &config).map_err(at)?;
            let d = model.diagnostics(env.qc_eff).map_err(at)?;
            let rows = d
                .trace
                .times
                .iter()
                .enumerate()
                .map(|(t, time)| {
                    let mut row = vec![format_f64(bias.0), format_f64(*time)];
                    row.extend((0..n).map(|l| format_f64(d.trace.populations[(t, l)])));
                    row.push(format_f64(d.signal[t]));
                    row
                })
                .collect();
            let point = DecayPoint {
                phi_ext: bias.0,
                freq_hz: model.spectrum.omega01(),
                t1_population_s: d.population_fit.t1,
                t1_signal_s: d.signal_fit.t1,
                signal_error: d.signal_error(),
                misassignment_ground: d.misassignment.0,
                misassignment_excited: d.misassignment.1,
                exponentialness: d.exponentialness.m,
                dominant_rate_per_s: d.exponentialness.dominant_rate,
            };
            Ok((point, rows))
        })
        .collect::<Result<_, _>>()?;

    if let Some(path) = &a.traces {
        let mut headers = vec!["phi_ext".to_string(), "time_s".to_string()];
        headers.extend((0..n).map(|l| format!("p{l}")));
        headers.push("signal".into());
        let mut table = CsvTable {
            headers,
            rows: Vec::new(),
        };
        for (_, rows) in &results {
            table.rows.extend(rows.iter().cloned());
        }
        table.write(path)?;
    }
    let doc = DecayDocument {
        schema: SCHEMA_DECAY.into(),
        qubit_id: device.qubit_id.clone(),
        n_levels: n,
        qc_eff: env.qc_eff,
        epsilon: env.epsilon,
        points: results.into_iter().map(|(p, _)| p).collect(),
        inputs: digests(&[&a.device])?,
    };
    emit(a.out.as_deref(), &json_bytes(&doc))
}

fn pipeline_config(p: &PipelineArgs) -> PipelineConfig {
    let model = ModelConfig::with_levels(p.model.levels);
    PipelineConfig {
        bin_width: p.bin_width_hz,
        exclusion: ExclusionConfig {
            threshold: p.exclusion_threshold,
            rates: p.exclusion_rates.into(),
            model,
            ..ExclusionConfig::default()
        },
        extraction: ExtractionConfig {
            mode: p.mode.into(),
            model,
            initial_qc: p.model.qc_eff,
            ..ExtractionConfig::default()
        },
    }
}

fn run_config(p: &PipelineArgs, env: &Environment) -> RunConfig {
    RunConfig {
        epsilon: env.epsilon,
        bin_width_hz: p.bin_width_hz,
        exclusion_threshold: p.exclusion_threshold,
        n_levels: p.model.levels,
        t_qubit_k: env.t_qubit,
        t_res_k: env.t_res,
        mode: p.mode.into(),
    }
}

pub fn extract_qceff(a: &ExtractArgs) -> CliResult {
    let (file, device) = load_device(&a.device)?;
    let device = with_environment(&device, &a.pipeline.model)?;
    let (ds, n_dropped_ingest) = read_t1_csv(&a.data, &device.qubit_id)?;
    if n_dropped_ingest > 0 {
        log::warn!(
            "{}: dropped {n_dropped_ingest} records with error bars above twice the value",
            a.data.display()
        );
    }
    let out = run_pipeline(&ds, &device, &pipeline_config(&a.pipeline))?;
    if out.distribution.entries.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{}: no record survived exclusion and inversion",
            a.data.display()
        ))
        .into());
    }
    let doc = QceffDocument {
        schema: SCHEMA_QCEFF.into(),
        process_label: Some(file.process_label.clone()),
        counts: PipelineCounts {
            n_raw: ds.len() + n_dropped_ingest,
            n_dropped_ingest,
            n_after_binning: out.binned.len(),
            n_excluded: out.dropped.len(),
            n_failed: out.failures.len(),
            n_extracted: out.distribution.entries.len(),
        },
        distribution: out.distribution,
        config: run_config(&a.pipeline, &device.env),
        failures: out.failures,
        inputs: digests(&[&a.device, &a.data])?,
    };
    emit(a.out.as_deref(), &json_bytes(&doc))
}

fn epsilon_points(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && min.is_finite() && max.is_finite() && max >= min) {
        return Err(CliError::Usage(format!(
            "invalid exponent grid {min}:{max} step {step}"
        )));
    }
    let lo = (min / step).round() as i64;
    let hi = (max / step).round() as i64;
    let per_unit = (1.0 / step).round();
    // divide by the integer count per unit where possible so grid points are exact decimals
    let exact = ((1.0 / step) - per_unit).abs() < 1e-9;
    Ok((lo..=hi)
        .map(|k| if exact { k as f64 / per_unit } else { k as f64 * step })
        .collect())
}

pub fn fit_epsilon(a: &EpsilonArgs) -> CliResult {
    if a.device.len() != a.data.len() {
        return Err(CliError::Usage(format!(
            "{} device files but {} datasets; pass them in pairs",
            a.device.len(),
            a.data.len()
        )));
    }
    let grid = epsilon_points(a.eps_min, a.eps_max, a.eps_step)?;
    let config = pipeline_config(&a.pipeline);
    let mut inputs = Vec::new();
    let mut paths: Vec<&Path> = Vec::new();
    for (dev_path, data_path) in a.device.iter().zip(&a.data) {
        let (_, device) = load_device(dev_path)?;
        let device = with_environment(&device, &a.pipeline.model)?;
        let (ds, _) = read_t1_csv(data_path, &device.qubit_id)?;
        let binned = bin_average(&ds.with_frequencies(device.params)?, config.bin_width)?;
        let (kept, _) = exclusion_filter(&binned, &device, &config.exclusion)?;
        inputs.push((device, kept));
        paths.push(dev_path);
        paths.push(data_path);
    }
    let scan = fit_epsilon_global(&inputs, &config.extraction, &grid)?;
    let doc = EpsilonDocument {
        schema: SCHEMA_EPSILON.into(),
        mode: config.extraction.mode,
        qubits: inputs.iter().map(|(d, _)| d.qubit_id.clone()).collect(),
        scan,
        inputs: digests(&paths)?,
    };
    emit(a.out.as_deref(), &json_bytes(&doc))
}

pub fn fit_flux_noise(a: &FluxNoiseArgs) -> CliResult {
    let (_, device) = load_device(&a.device)?;
    let ds = read_dephasing_csv(&a.data, &device.qubit_id)?;
    let fit = extract_flux_noise_amplitude(&ds, device.params)?;
    let doc = FluxNoiseDocument {
        schema: SCHEMA_FLUX_NOISE.into(),
        qubit_id: device.qubit_id.clone(),
        sqrt_a_phi_uphi0_per_rthz: fit.sqrt_a_phi * 1e6,
        fit,
        inputs: digests(&[&a.device, &a.data])?,
    };
    emit(a.out.as_deref(), &json_bytes(&doc))
}

/// A labelled sample with the metadata of the distribution(s) behind it.
struct Sample {
    label: String,
    values: Vec<f64>,
    process_label: Option<String>,
    config: Option<RunConfig>,
}

fn load_samples(a: &CompareArgs) -> CliResult<(Vec<Sample>, Vec<PathBuf>)> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    let mut cache: HashMap<PathBuf, QceffDocument> = HashMap::new();
    let mut load = |p: &Path| -> CliResult<QceffDocument> {
        if !cache.contains_key(p) {
            paths.push(p.to_path_buf());
            cache.insert(p.to_path_buf(), read_json(p, SCHEMA_QCEFF)?);
        }
        Ok(cache[p].clone())
    };

    let mut samples = Vec::new();
    for p in &a.dist {
        let doc = load(p)?;
        samples.push(Sample {
            label: doc.distribution.qubit_id.clone(),
            values: doc.distribution.values(),
            process_label: doc.process_label.clone(),
            config: Some(doc.config.clone()),
        });
    }
    let dist_labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    for (s, p) in samples.iter_mut().zip(&a.dist) {
        if dist_labels.iter().filter(|l| **l == s.label).count() > 1 {
            s.label = format!("{} ({})", s.label, p.display());
        }
    }
    for spec in &a.pool {
        let (label, files) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--pool expects LABEL=a.json,b.json, got {spec:?}")))?;
        let files: Vec<&str> = files.split(',').map(str::trim).filter(|f| !f.is_empty()).collect();
        if label.trim().is_empty() || files.is_empty() {
            return Err(CliError::Usage(format!(
                "--pool expects LABEL=a.json,b.json, got {spec:?}"
            )));
        }
        let mut values = Vec::new();
        let mut process: Vec<Option<String>> = Vec::new();
        for f in files {
            let doc = load(Path::new(f))?;
            values.extend(doc.distribution.values());
            process.push(doc.process_label.clone());
        }
        process.dedup();
        samples.push(Sample {
            label: label.trim().to_string(),
            values,
            process_label: if process.len() == 1 {
                process.pop().flatten()
            } else {
                None
            },
            config: None,
        });
    }
    if samples.is_empty() {
        return Err(CliError::Usage("nothing to compare; pass --dist or --pool".into()));
    }
    let mut seen = Vec::new();
    for s in &samples {
        if seen.contains(&&s.label) {
            return Err(CliError::Usage(format!("label {:?} used twice", s.label)));
        }
        seen.push(&s.label);
    }
    Ok((samples, paths))
}

pub fn compare(a: &CompareArgs) -> CliResult {
    let (samples, paths) = load_samples(a)?;
    let labelled: Vec<(String, Vec<f64>)> = samples.iter().map(|s| (s.label.clone(), s.values.clone())).collect();
    let doc = CompareDocument {
        schema: SCHEMA_COMPARE.into(),
        alpha: a.alpha,
        labels: samples.iter().map(|s| s.label.clone()).collect(),
        entries: welch_matrix(&labelled, a.alpha)?,
        inputs: digests(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>())?,
    };
    emit(a.out.as_deref(), &json_bytes(&doc))
}

pub fn report(a: &CompareArgs) -> CliResult {
    let (samples, paths) = load_samples(a)?;
    let labelled: Vec<(String, Vec<f64>)> = samples.iter().map(|s| (s.label.clone(), s.values.clone())).collect();
    let meta: Vec<(Option<String>, Option<RunConfig>)> = samples
        .iter()
        .map(|s| (s.process_label.clone(), s.config.clone()))
        .collect();
    let inputs = digests(&paths.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let doc = build_report(&labelled, &meta, a.alpha, inputs)?;
    emit(a.out.as_deref(), &json_bytes(&doc))
}
