//! Task execution and artifact writing.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use skyrc::analysis::*;
use skyrc::backend::BackendConfig;
use skyrc::encoding::load_mnist;
use skyrc::harness::{run_reservoir, FeatureMatrix, RunManifest};
use skyrc::pipeline::*;
use skyrc::readout::*;
use skyrc::{Error, Result};

use crate::config::{RunConfig, Task};

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable summary");
    fs::write(path, text + "\n").map_err(|e| io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io(path, e))
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source: e }
}

fn manifest(cfg: &RunConfig, started: Instant, out: &Path) -> Result<()> {
    let kinds = vec![match &cfg.backend {
        BackendConfig::Micromagnetic(_) => "micromagnetic".to_string(),
        BackendConfig::Surrogate(_) => "surrogate".to_string(),
    }];
    RunManifest::new(&cfg.text, cfg.seed, kinds, cfg.options.workers, started).write(&out.join("manifest.json"))?;
    write_text(&out.join("config.toml"), &cfg.text)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let out = cfg.output.as_path();
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    match cfg.task {
        Task::Waveform => waveform(cfg, out)?,
        Task::Mnist => mnist(cfg, out)?,
        Task::Sweep => sweep(cfg, out)?,
        Task::Probe => return Err(Error::InvalidParams("task `probe` runs through `skyrc probe <name>`".into())),
    }
    manifest(cfg, started, out)
}

fn waveform(cfg: &RunConfig, out: &Path) -> Result<()> {
    let o = run_waveform(&cfg.subsections, &cfg.waveform, WAVEFORM_SAMPLE_RATE, &cfg.options, cfg.ridge)?;
    o.run.features.write_csv(&out.join("features.csv"))?;
    o.waveform.protocol.write_csv(&out.join("protocol.csv"))?;
    let mut w = o.weights;
    w.manifest_hash = Some(skyrc::harness::config_hash(&cfg.text));
    w.write_csv(&out.join("weights.csv"))?;
    write_json(&out.join("eval.json"), &o.report)?;
    println!(
        "waveform: per-segment test accuracy {:.3}, per-sample {:.3}",
        o.report.test_segment_accuracy, o.report.test_sample_accuracy
    );
    Ok(())
}

fn mnist(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut images = load_mnist(&cfg.mnist_paths.0, &cfg.mnist_paths.1)?;
    let n = cfg.mnist_count.unwrap_or(cfg.split.train_n + cfg.split.test_n);
    if n > images.len() {
        return Err(Error::Split(format!("{n} images requested, file holds {}", images.len())));
    }
    images.truncate(n);
    let labels: Vec<u8> = images.iter().map(|i| i.label).collect();
    let features = mnist_features(&images, &cfg.subsections, &cfg.mnist, &cfg.options)?;

    let mut csv = String::from("label");
    for j in 0..features.cols() {
        csv.push_str(&format!(",f{j}"));
    }
    csv.push('\n');
    for (i, &l) in labels.iter().enumerate() {
        csv.push_str(&l.to_string());
        for v in features.row(i) {
            csv.push(',');
            csv.push_str(&v.to_string());
        }
        csv.push('\n');
    }
    write_text(&out.join("mnist_features.csv"), &csv)?;
    let first = mnist_digit_run(&images[0], 0, &cfg.subsections, &cfg.mnist, &cfg.options)?;
    first.features.write_csv(&out.join("features.csv"))?;

    let report = evaluate_mnist(&features, &labels, 10, cfg.split, cfg.ridge)?;
    report.write_json(&out.join("eval.json"))?;
    report.write_confusion_csv(&out.join("confusion.csv"))?;
    let (train, _) = cfg.split.indices(labels.len(), 0)?;
    let mut w = fit_readout(
        &features.select_rows(&train),
        &one_hot(&train.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 10),
        cfg.ridge,
    )?;
    w.manifest_hash = Some(skyrc::harness::config_hash(&cfg.text));
    w.write_csv(&out.join("weights.csv"))?;
    println!("mnist: accuracy {:.3} ± {:.3} over {} repeats", report.accuracy, report.accuracy_std, report.per_repeat.len());
    if cfg.shuffled_control {
        let control = evaluate_mnist(&features, &shuffled_labels(&labels, cfg.seed), 10, cfg.split, cfg.ridge)?;
        control.write_json(&out.join("eval_shuffled.json"))?;
        println!("mnist: shuffled-label control {:.3}", control.accuracy);
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let spec = SweepSpec {
        devices: cfg.sweep_devices.clone(),
        amplitudes: cfg.sweep_amplitudes.clone(),
        waveform: cfg.waveform.clone(),
        subsections: cfg.subsections.len(),
        h_const_band: (
            cfg.subsections.first().map_or(H_CONST_BAND.0, |s| s.h_const),
            cfg.subsections.last().map_or(H_CONST_BAND.1, |s| s.h_const),
        ),
        sv_threshold: cfg.probe.sv_threshold,
    };
    let report = device_sweep(&spec, &cfg.options, cfg.ridge)?;
    let mut csv = String::from("device,dmi_d,amplitude,mean_density_um2,mean_count,test_segment_accuracy,test_sample_accuracy,effective_rank\n");
    for p in &report.points {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.device,
            p.dmi_d,
            p.amplitude,
            p.mean_density,
            p.mean_count,
            p.report.test_segment_accuracy,
            p.report.test_sample_accuracy,
            p.dimensionality.effective_rank
        ));
    }
    write_text(&out.join("sweep.csv"), &csv)?;
    write_json(&out.join("sweep.json"), &report)?;
    write_json(
        &out.join("correlation.json"),
        &serde_json::json!({
            "pearson_r": report.correlation,
            "pearson_r_per_sample": report.sample_correlation,
            "points": report.points.len(),
            "device_reference_r": report.device_reference_correlation,
        }),
    )?;
    println!("sweep: r = {:?} over {} points", report.correlation, report.points.len());
    Ok(())
}

fn stored_or_fresh(cfg: &RunConfig) -> Result<FeatureMatrix> {
    match &cfg.probe.features {
        Some(path) => FeatureMatrix::read_csv(path),
        None => {
            let w = skyrc::encoding::generate_waveform(&cfg.waveform)?;
            Ok(run_reservoir(&cfg.subsections, &w.protocol, WAVEFORM_SAMPLE_RATE, &cfg.options)?.features)
        }
    }
}

fn series_csv(header: &str, columns: &[&[f64]]) -> String {
    let mut s = format!("{header}\n");
    for i in 0..columns[0].len() {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn probe(cfg: &RunConfig, name: &str) -> Result<()> {
    let started = Instant::now();
    let out = cfg.output.as_path();
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let p = &cfg.probe;
    match name {
        "memory" => {
            let m = memory_probe(&cfg.backend, p.h_const, p.amplitude, &p.spec)?;
            write_text(&out.join("memory.csv"), &series_csv("t,sine_sine,square_sine", &[&m.times, &m.sine_sine, &m.square_sine]))?;
            write_json(
                &out.join("memory.json"),
                &serde_json::json!({ "divergence": m.divergence, "noise_floor": m.noise_floor, "ratio": m.signal_to_noise() }),
            )?;
            println!("memory: divergence {:.4}, noise floor {:.4}", m.divergence, m.noise_floor);
        }
        "nonlinearity" => {
            let n = nonlinearity_probe(&cfg.backend, p.h_const, &p.amplitudes, p.probe_time, &p.spec)?;
            write_text(&out.join("nonlinearity.csv"), &series_csv("amplitude,v", &[&n.amplitudes, &n.voltages]))?;
            write_json(&out.join("nonlinearity.json"), &n)?;
            println!("nonlinearity: residual {:.1}%, nonlinear {}", 100.0 * n.relative_residual, n.nonlinear);
        }
        "fading" => {
            let f = fading_probe(&cfg.backend, p.h_const, p.amplitude, p.smoothing, &p.spec)?;
            write_text(&out.join("fading.csv"), &series_csv("t,v", &[&f.times, &f.voltages]))?;
            write_json(
                &out.join("fading.json"),
                &serde_json::json!({ "initial": f.initial, "peak_deviation": f.peak_deviation, "horizon_s": f.horizon }),
            )?;
            println!("fading: horizon {:?} s", f.horizon);
        }
        "dimensionality" => {
            let features = stored_or_fresh(cfg)?;
            let r = dimensionality_report(&features.voltages(), p.sv_threshold)?;
            let idx: Vec<f64> = (1..=r.singular_values.len()).map(|i| i as f64).collect();
            write_text(&out.join("singular_values.csv"), &series_csv("index,sigma", &[&idx, &r.singular_values]))?;
            write_json(&out.join("dimensionality.json"), &r)?;
            let pairs = out.join("pairs");
            fs::create_dir_all(&pairs).map_err(|e| io(&pairs, e))?;
            write_pair_tables(&features.voltages(), &pairs)?;
            println!("dimensionality: effective rank {} of {}", r.effective_rank, r.singular_values.len());
        }
        "drift" => {
            let features = stored_or_fresh(cfg)?;
            let r = drift_probe(&features.voltages(), &features.sample_times, p.drift_window)?;
            write_json(&out.join("drift.json"), &r)?;
            println!("drift: median |normalised slope| {:.3e}", r.median_abs_slope());
        }
        other => return Err(Error::InvalidParams(format!("unknown probe `{other}`"))),
    }
    manifest(cfg, started, out)
}

/// Module that owns an error, for messages.
pub fn module_of(e: &Error) -> &'static str {
    match e {
        Error::InvalidLattice(_) | Error::StabilityViolation(_) | Error::Geometry(_) => "texture-core",
        Error::InvalidParams(_) => "backends",
        Error::Format { .. } | Error::Io { .. } | Error::InvalidProtocol(_) => "encoding",
        Error::SingularSystem { .. } | Error::DimensionMismatch { .. } | Error::Split(_) => "readout",
        Error::DegenerateInput(_) => "analysis",
        Error::Subsections(_) => "reservoir-harness",
    }
}
