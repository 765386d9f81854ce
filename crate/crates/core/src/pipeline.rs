//! End-to-end tasks: waveform recognition, MNIST features and evaluation,
//! and the device sweep relating skyrmion density to accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{count_accuracy_correlation, dimensionality_report, mean_skyrmion_density, DimensionalityReport};
use crate::backend::{Backend, MicromagneticConfig, SurrogateParams};
use crate::encoding::{generate_waveform, preprocess_mnist_with, MnistImage, MnistLayout, Waveform, WaveformSpec};
use crate::error::{Error, Result};
use crate::harness::{h_const_grid, run_reservoir_item, with_workers, ReservoirRun, RunOptions, SubsectionSpec};
use crate::matrix::Matrix;
use crate::readout::{evaluate_waveform, ReadoutWeights, Ridge, WaveformReport};

/// Voltage samples per second for the waveform task.
pub const WAVEFORM_SAMPLE_RATE: f64 = 100.0;
/// Voltage samples per second for MNIST features.
pub const MNIST_SAMPLE_RATE: f64 = 80.0;
/// Pixel cycles per second.
pub const MNIST_DRIVE_FREQUENCY: f64 = 200.0;
/// Per-subsection drive amplitudes (Oe) of the nine MNIST subsections.
pub const MNIST_AMPLITUDES: [f64; 9] = [64.0, 64.0, 64.0, 64.0, 70.0, 70.0, 70.0, 70.0, 70.0];
/// `H_const` band (Oe) shared by the default subsection grids.
pub const H_CONST_BAND: (f64, f64) = (-1.6, 1.6);
/// Cross-device correlation reported for the physical devices.
pub const DEVICE_CORRELATION: f64 = 0.82;

/// Per-sample `±1` targets and segment indices at the voltage sampling grid.
/// Sample `k` takes the label of drive sample `k · r`.
pub fn waveform_targets(waveform: &Waveform, sample_rate: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    let r = crate::harness::decimation(&waveform.protocol, sample_rate)?;
    let k = waveform.protocol.len() / r;
    let labels = (0..k).map(|i| waveform.labels[i * r]).collect();
    let segments = (0..k).map(|i| i * r / waveform.samples_per_segment).collect();
    Ok((labels, segments))
}

pub struct WaveformOutcome {
    pub waveform: Waveform,
    pub run: ReservoirRun,
    pub report: WaveformReport,
    pub weights: ReadoutWeights<f64>,
}

pub fn run_waveform<B: Backend>(
    specs: &[SubsectionSpec<B>],
    spec: &WaveformSpec,
    sample_rate: f64,
    options: &RunOptions,
    ridge: Ridge,
) -> Result<WaveformOutcome> {
    let waveform = generate_waveform(spec)?;
    let run = with_workers(options.workers, || run_reservoir_item(specs, &waveform.protocol, sample_rate, options, 0))??;
    let (labels, segments) = waveform_targets(&waveform, sample_rate)?;
    let (report, weights) = evaluate_waveform(&run.features.values, &labels, &segments, ridge)?;
    Ok(WaveformOutcome { waveform, run, report, weights })
}

/// MNIST encoding knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistEncoding {
    pub layout: MnistLayout,
    pub drive_frequency: f64,
    pub sample_rate: f64,
}

impl Default for MnistEncoding {
    fn default() -> Self {
        Self { layout: MnistLayout::default(), drive_frequency: MNIST_DRIVE_FREQUENCY, sample_rate: MNIST_SAMPLE_RATE }
    }
}

/// Nine subsections on the default `H_const` band with the MNIST amplitudes.
pub fn mnist_specs<B: Clone>(backend: &B) -> Vec<SubsectionSpec<B>> {
    h_const_grid(MNIST_AMPLITUDES.len(), H_CONST_BAND.0, H_CONST_BAND.1, backend)
        .into_iter()
        .zip(MNIST_AMPLITUDES)
        .map(|(s, a)| s.with_amplitude(a))
        .collect()
}

/// The reservoir run for one digit. Each digit starts from a fresh reset and
/// uses stream item `index`.
pub fn mnist_digit_run<B: Backend>(
    image: &MnistImage,
    index: usize,
    specs: &[SubsectionSpec<B>],
    encoding: &MnistEncoding,
    options: &RunOptions,
) -> Result<ReservoirRun> {
    let protocol = preprocess_mnist_with(image, &encoding.layout, encoding.drive_frequency, 1.0)?;
    let mut opts = options.clone();
    opts.include_bias = false;
    run_reservoir_item(specs, &protocol, encoding.sample_rate, &opts, index as u32)
}

/// One flattened feature row per digit (subsection-major), with a trailing
/// 1 when `options.include_bias` is set.
pub fn mnist_features<B: Backend>(
    images: &[MnistImage],
    specs: &[SubsectionSpec<B>],
    encoding: &MnistEncoding,
    options: &RunOptions,
) -> Result<Matrix<f64>> {
    if images.is_empty() {
        return Err(Error::InvalidParams("no MNIST images".into()));
    }
    let rows: Vec<Vec<f64>> = with_workers(options.workers, || {
        images
            .par_iter()
            .enumerate()
            .map(|(i, img)| {
                let mut row = mnist_digit_run(img, i, specs, encoding, options)?.features.flatten();
                if options.include_bias {
                    row.push(1.0);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Matrix::from_rows(&rows)
}

/// Skyrmion density averaged over every snapshot of every subsection,
/// per µm² of lattice.
pub fn run_density(run: &ReservoirRun, area_um2: f64) -> Option<f64> {
    let counts: Vec<usize> = run.snapshots.iter().flatten().map(|s| s.report.skyrmion_count).collect();
    (!counts.is_empty()).then(|| mean_skyrmion_density(&counts, area_um2))
}

/// One `(device, amplitude)` point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub device: String,
    pub dmi_d: f64,
    pub amplitude: f64,
    /// Skyrmions per µm².
    pub mean_density: f64,
    pub mean_count: f64,
    pub report: WaveformReport,
    pub dimensionality: DimensionalityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Pearson r between density and per-segment test accuracy.
    pub correlation: Option<f64>,
    /// Pearson r between density and per-sample test accuracy.
    pub sample_correlation: Option<f64>,
    pub device_reference_correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub devices: Vec<(String, MicromagneticConfig)>,
    pub amplitudes: Vec<f64>,
    pub waveform: WaveformSpec,
    pub subsections: usize,
    pub h_const_band: (f64, f64),
    pub sv_threshold: f64,
}

/// Runs the waveform task for every device and amplitude, then correlates
/// skyrmion density with accuracy. Snapshots are forced on.
pub fn device_sweep(spec: &SweepSpec, options: &RunOptions, ridge: Ridge) -> Result<SweepReport> {
    let mut opts = options.clone();
    opts.snapshot_interval.get_or_insert(crate::harness::SNAPSHOT_INTERVAL);
    let mut points = Vec::new();
    for (name, device) in &spec.devices {
        let specs = h_const_grid(spec.subsections, spec.h_const_band.0, spec.h_const_band.1, device);
        let area = device.grid.nx as f64 * device.grid.ny as f64 * device.grid.cell_size * device.grid.cell_size;
        for &amplitude in &spec.amplitudes {
            let wspec = WaveformSpec { amplitude, ..spec.waveform.clone() };
            let out = run_waveform(&specs, &wspec, WAVEFORM_SAMPLE_RATE, &opts, ridge)?;
            let density = run_density(&out.run, area).unwrap_or(0.0);
            points.push(SweepPoint {
                device: name.clone(),
                dmi_d: device.params.dmi_d,
                amplitude,
                mean_density: density,
                mean_count: density * area,
                dimensionality: dimensionality_report(&out.run.features.voltages(), spec.sv_threshold)?,
                report: out.report,
            });
        }
    }
    let pairs = |f: fn(&WaveformReport) -> f64| -> Vec<(f64, f64)> {
        points.iter().map(|p| (p.mean_density, f(&p.report))).collect()
    };
    Ok(SweepReport {
        correlation: count_accuracy_correlation(&pairs(|r| r.test_segment_accuracy)).ok(),
        sample_correlation: count_accuracy_correlation(&pairs(|r| r.test_sample_accuracy)).ok(),
        points,
        device_reference_correlation: DEVICE_CORRELATION,
    })
}

/// Calibrated parameter sets.
pub mod presets {
    use super::*;

    /// Devices `A` to `D`: DMI falls from A to D at fixed anisotropy.
    pub const DEVICE_DMI: [(&str, f64); 4] = [("A", 0.8), ("B", 0.7), ("C", 0.6), ("D", 0.5)];

    /// Desk-scale micromagnetic device. `None` for an unknown name.
    pub fn device(name: &str) -> Option<MicromagneticConfig> {
        let &(_, d) = DEVICE_DMI.iter().find(|(n, _)| n.eq_ignore_ascii_case(name))?;
        let mut cfg = MicromagneticConfig::default();
        cfg.params.dmi_d = d;
        cfg.params.temperature = 0.01;
        cfg.time_map = 10.0;
        cfg.params.dt = cfg.params.max_stable_dt(0.0);
        Some(cfg)
    }

    /// Ferromagnetic-domain film: soft anisotropy, so the drive reverses it
    /// through domain-wall motion, and DMI below the chiral-texture threshold.
    pub fn ferro_device() -> MicromagneticConfig {
        let mut cfg = device("A").expect("device A exists");
        cfg.params.dmi_d = 0.1;
        cfg.params.anisotropy_k = 0.05;
        cfg.params.dt = cfg.params.max_stable_dt(0.0);
        cfg
    }

    pub fn surrogate_waveform() -> SurrogateParams {
        SurrogateParams::default()
    }

    /// Slower leak and weaker coupling than the waveform preset: a digit
    /// drives each node 440 times at up to 70 Oe.
    pub fn surrogate_mnist() -> SurrogateParams {
        SurrogateParams { leak_gamma: 0.995, input_gain: 0.01, feedback_gain: 0.004, bias: 1.0, ..SurrogateParams::default() }
    }
}
