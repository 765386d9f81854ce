//! Subsection orchestration: drive each backend with the shared protocol,
//! sample the voltage, assemble the feature matrix.

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{count_skyrmions, TextureReport, DEFAULT_MZ_THRESHOLD, SKYRMION_MAX_AREA_UM2};
use crate::backend::{Backend, BackendConfig, Reservoir};
use crate::encoding::FieldProtocol;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::StreamKey;

/// Protocol seconds between texture snapshots.
pub const SNAPSHOT_INTERVAL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsectionSpec<B = BackendConfig> {
    pub id: String,
    /// Oe.
    pub h_const: f64,
    /// Replaces the protocol's nominal amplitude for this subsection.
    pub amplitude_override: Option<f64>,
    pub backend: B,
}

impl<B> SubsectionSpec<B> {
    pub fn new(id: impl Into<String>, h_const: f64, backend: B) -> Self {
        Self { id: id.into(), h_const, amplitude_override: None, backend }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude_override = Some(amplitude);
        self
    }

    fn drive_scale(&self, protocol: &FieldProtocol) -> f64 {
        self.amplitude_override.map_or(1.0, |a| a / protocol.nominal_amplitude())
    }
}

/// `n` subsections with `h_const` evenly spaced over `[lo, hi]`.
pub fn h_const_grid<B: Clone>(n: usize, lo: f64, hi: f64, backend: &B) -> Vec<SubsectionSpec<B>> {
    (0..n)
        .map(|i| {
            let h = if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            SubsectionSpec::new(format!("S{:02}", i + 1), h, backend.clone())
        })
        .collect()
}

/// Harness knobs shared by every subsection of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub include_bias: bool,
    /// Protocol seconds between texture snapshots; `None` disables them.
    pub snapshot_interval: Option<f64>,
    pub mz_threshold: f64,
    pub max_skyrmion_area_um2: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            include_bias: true,
            snapshot_interval: None,
            mz_threshold: DEFAULT_MZ_THRESHOLD,
            max_skyrmion_area_um2: SKYRMION_MAX_AREA_UM2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub report: TextureReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubsectionRun {
    pub voltages: Vec<f64>,
    pub sample_times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

/// Drive samples per voltage sample; must be a whole number.
pub fn decimation(protocol: &FieldProtocol, sample_rate: f64) -> Result<usize> {
    let r = protocol.rate() / sample_rate;
    let rounded = r.round();
    if !(sample_rate > 0.0) || rounded < 1.0 || (r - rounded).abs() > 1e-9 * rounded {
        return Err(Error::InvalidProtocol(format!(
            "drive rate {} Hz is not a whole multiple of the sample rate {sample_rate} Hz",
            protocol.rate()
        )));
    }
    Ok(rounded as usize)
}

fn snapshot_stride(protocol: &FieldProtocol, interval: Option<f64>) -> Option<usize> {
    interval.map(|s| ((s / protocol.spacing()).round() as usize).max(1))
}

/// Resets the backend under `h_const` and plays the protocol.
///
/// Voltage sample `k` is read at `t_k = k / sample_rate`, i.e. after the
/// drive intervals before `t_k` and before the one starting there; `K` is
/// `len / decimation` (remainder samples are driven but not read).
pub fn run_subsection<B: Backend>(
    spec: &SubsectionSpec<B>,
    protocol: &FieldProtocol,
    sample_rate: f64,
    stream: StreamKey,
    options: &RunOptions,
) -> Result<SubsectionRun> {
    if !spec.h_const.is_finite() {
        return Err(Error::InvalidProtocol(format!("h_const of {} is not finite", spec.id)));
    }
    let scale = spec.drive_scale(protocol);
    let mut state = spec.backend.reset(spec.h_const, protocol.spacing(), stream)?;
    play(&mut state, protocol, spec.h_const, scale, sample_rate, options)
}

/// Plays `protocol` (scaled by `scale`, offset by `h_const`) on an existing
/// state, sampling as in [`run_subsection`].
pub fn play<S: Reservoir>(
    state: &mut S,
    protocol: &FieldProtocol,
    h_const: f64,
    scale: f64,
    sample_rate: f64,
    options: &RunOptions,
) -> Result<SubsectionRun> {
    let r = decimation(protocol, sample_rate)?;
    let k_total = protocol.len() / r;
    let snap = snapshot_stride(protocol, options.snapshot_interval);
    let dt = protocol.spacing();
    let mut voltages = Vec::with_capacity(k_total);
    let mut snapshots = Vec::new();
    for (j, &h_ac) in protocol.values().iter().enumerate() {
        if j % r == 0 && voltages.len() < k_total {
            voltages.push(state.read_voltage());
        }
        if let (Some(stride), Some(lattice)) = (snap, state.lattice()) {
            if j % stride == 0 {
                let report = count_skyrmions(lattice, options.mz_threshold, options.max_skyrmion_area_um2);
                snapshots.push(Snapshot { time: protocol.time(j), report });
            }
        }
        state.advance(h_const + scale * h_ac, dt)?;
    }
    let sample_times = (0..k_total).map(|k| k as f64 / sample_rate).collect();
    Ok(SubsectionRun { voltages, sample_times, snapshots })
}

/// Stable 32-bit id hash (FNV-1a) so a subsection keeps its noise stream
/// when the table is reordered.
pub fn subsection_stream(seed: u64, id: &str, item: u32) -> StreamKey {
    let mut h: u32 = 0x811c_9dc5;
    for b in id.bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    StreamKey::new(seed, h, item)
}

fn check_specs<B>(specs: &[SubsectionSpec<B>]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidProtocol("no subsections".into()));
    }
    let mut seen = HashSet::new();
    for s in specs {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::InvalidProtocol(format!("duplicate subsection id {}", s.id)));
        }
    }
    Ok(())
}

/// Runs `f` inside a pool of `workers` threads (0: global pool).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `K × N` sampled voltages, optionally followed by a bias column of ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: Matrix<f64>,
    pub sample_times: Vec<f64>,
    pub subsection_ids: Vec<String>,
    pub includes_bias: bool,
}

pub const BIAS_ID: &str = "bias";

impl FeatureMatrix {
    pub fn from_columns(columns: &[Vec<f64>], sample_times: Vec<f64>, ids: Vec<String>, include_bias: bool) -> Result<Self> {
        let values = Matrix::from_columns(columns)?;
        if values.rows() != sample_times.len() || values.cols() != ids.len() {
            return Err(Error::DimensionMismatch { expected: values.rows(), got: sample_times.len() });
        }
        if !values.is_finite() {
            return Err(Error::DegenerateInput("feature matrix contains NaN or Inf".into()));
        }
        let (values, mut ids) = if include_bias { (values.with_bias_column(), ids) } else { (values, ids) };
        if include_bias {
            ids.push(BIAS_ID.to_string());
        }
        Ok(Self { values, sample_times, subsection_ids: ids, includes_bias: include_bias })
    }

    /// Voltage columns only.
    pub fn voltages(&self) -> Matrix<f64> {
        let n = self.values.cols() - usize::from(self.includes_bias);
        self.values.select_columns(&(0..n).collect::<Vec<_>>())
    }

    pub fn n_subsections(&self) -> usize {
        self.values.cols() - usize::from(self.includes_bias)
    }

    /// Subsection-major flattening of the voltage block:
    /// `V¹(t_0..), V²(t_0..), …`.
    pub fn flatten(&self) -> Vec<f64> {
        let v = self.voltages();
        (0..v.cols()).flat_map(|j| v.column(j)).collect()
    }

    /// CSV with a `t,<ids…>` header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = format!("t,{}\n", self.subsection_ids.join(","));
        for (i, t) in self.sample_times.iter().enumerate() {
            out.push_str(&t.to_string());
            for v in self.values.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format(path, "empty file"))?;
        let mut fields = header.split(',');
        if fields.next() != Some("t") {
            return Err(Error::format(path, "header must start with `t`"));
        }
        let ids: Vec<String> = fields.map(str::to_string).collect();
        let includes_bias = ids.last().map(String::as_str) == Some(BIAS_ID);
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let parsed = parsed.map_err(|e| Error::format(path, format!("line {}: {e}", n + 2)))?;
            if parsed.len() != ids.len() + 1 {
                return Err(Error::format(path, format!("line {}: {} fields, expected {}", n + 2, parsed.len(), ids.len() + 1)));
            }
            times.push(parsed[0]);
            rows.push(parsed[1..].to_vec());
        }
        let values = Matrix::from_rows(&rows)?;
        let values = if rows.is_empty() { Matrix::zeros(0, ids.len()) } else { values };
        Ok(Self { values, sample_times: times, subsection_ids: ids, includes_bias })
    }
}

#[derive(Clone, Debug)]
pub struct ReservoirRun {
    pub features: FeatureMatrix,
    /// Snapshot series per subsection, in spec order.
    pub snapshots: Vec<Vec<Snapshot>>,
}

/// Runs every subsection (in parallel) and assembles columns in spec order.
/// `item` selects the stream item, e.g. the digit index of an MNIST run.
pub fn run_reservoir_item<B: Backend>(
    specs: &[SubsectionSpec<B>],
    protocol: &FieldProtocol,
    sample_rate: f64,
    options: &RunOptions,
    item: u32,
) -> Result<ReservoirRun> {
    check_specs(specs)?;
    let results: Vec<Result<SubsectionRun>> = specs
        .par_iter()
        .map(|s| run_subsection(s, protocol, sample_rate, subsection_stream(options.seed, &s.id, item), options))
        .collect();
    let mut failures = Vec::new();
    let mut runs = Vec::with_capacity(specs.len());
    for (spec, r) in specs.iter().zip(results) {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => failures.push((spec.id.clone(), e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Subsections(failures));
    }
    let times = runs[0].sample_times.clone();
    let mut columns = Vec::with_capacity(runs.len());
    let mut snapshots = Vec::with_capacity(runs.len());
    for run in runs {
        columns.push(run.voltages);
        snapshots.push(run.snapshots);
    }
    let ids = specs.iter().map(|s| s.id.clone()).collect();
    let features = FeatureMatrix::from_columns(&columns, times, ids, options.include_bias)?;
    Ok(ReservoirRun { features, snapshots })
}

/// [`run_reservoir_item`] with item 0, inside a pool of `options.workers`.
pub fn run_reservoir<B: Backend>(
    specs: &[SubsectionSpec<B>],
    protocol: &FieldProtocol,
    sample_rate: f64,
    options: &RunOptions,
) -> Result<ReservoirRun> {
    with_workers(options.workers, || run_reservoir_item(specs, protocol, sample_rate, options, 0))?
}

/// Provenance written next to every artifact set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical run configuration.
    pub config_hash: String,
    pub seed: u64,
    pub backend_kinds: Vec<String>,
    pub workers: usize,
    pub wall_seconds: f64,
    pub software_version: String,
}

impl RunManifest {
    pub fn new(config_text: &str, seed: u64, backend_kinds: Vec<String>, workers: usize, started: Instant) -> Self {
        Self {
            config_hash: config_hash(config_text),
            seed,
            backend_kinds,
            workers,
            wall_seconds: started.elapsed().as_secs_f64(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::mock::{LinearMock, RelaxingMock};
    use crate::backend::SurrogateParams;

    fn sine(len: usize, spacing: f64) -> FieldProtocol {
        FieldProtocol::new(spacing, (0..len).map(|j| 24.0 * (j as f64 * 0.37).sin()).collect()).unwrap()
    }

    #[test]
    fn reads_precede_each_block() {
        let spec = SubsectionSpec::new("a", 0.0, LinearMock { gain: 1.0 });
        let p = FieldProtocol::new(0.01, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let run = run_subsection(&spec, &p, 50.0, StreamKey::default(), &RunOptions::default()).unwrap();
        // Decimation 2: reads before samples 0, 2, 4.
        assert_eq!(run.voltages, vec![0.0, 2.0, 4.0]);
        assert_eq!(run.sample_times, vec![0.0, 0.02, 0.04]);
    }

    #[test]
    fn doubling_sample_rate_refines() {
        let spec = SubsectionSpec::new("s", 0.4, SurrogateParams::default());
        let p = sine(400, 1.0 / 200.0);
        let coarse = run_subsection(&spec, &p, 100.0, StreamKey::default(), &RunOptions::default()).unwrap();
        let fine = run_subsection(&spec, &p, 200.0, StreamKey::default(), &RunOptions::default()).unwrap();
        assert_eq!(fine.voltages.len(), 2 * coarse.voltages.len());
        for (k, v) in coarse.voltages.iter().enumerate() {
            assert!((fine.voltages[2 * k] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_override_rescales_drive() {
        let p = FieldProtocol::new(0.01, vec![2.0, 4.0]).unwrap().with_nominal_amplitude(4.0).unwrap();
        let spec = SubsectionSpec::new("a", 1.0, LinearMock { gain: 1.0 }).with_amplitude(8.0);
        let run = run_subsection(&spec, &p, 100.0, StreamKey::default(), &RunOptions::default()).unwrap();
        assert_eq!(run.voltages, vec![0.0, 4.0]);
    }

    #[test]
    fn rejects_non_integer_decimation() {
        let spec = SubsectionSpec::new("a", 0.0, LinearMock { gain: 1.0 });
        let p = sine(10, 0.01);
        assert!(run_subsection(&spec, &p, 30.0, StreamKey::default(), &RunOptions::default()).is_err());
    }

    #[test]
    fn columns_follow_spec_order_with_bias() {
        let specs: Vec<_> = [0.5, -1.0, 1.5]
            .iter()
            .enumerate()
            .map(|(i, &h)| SubsectionSpec::new(format!("r{i}"), h, RelaxingMock { gain: 1.0 + i as f64, tau: 0.05 }))
            .collect();
        let p = sine(50, 0.01);
        let run = run_reservoir(&specs, &p, 100.0, &RunOptions::default()).unwrap();
        let f = &run.features;
        assert_eq!(f.values.shape(), (50, 4));
        assert_eq!(f.subsection_ids, vec!["r0", "r1", "r2", "bias"]);
        assert!(f.values.column(3).iter().all(|&v| v == 1.0));
        for (j, s) in specs.iter().enumerate() {
            let single = run_subsection(s, &p, 100.0, subsection_stream(0, &s.id, 0), &RunOptions::default()).unwrap();
            assert_eq!(f.values.column(j), single.voltages);
        }
    }

    #[test]
    fn duplicate_ids_and_empty_tables_rejected() {
        let p = sine(10, 0.01);
        let none: Vec<SubsectionSpec<LinearMock>> = vec![];
        assert!(run_reservoir(&none, &p, 100.0, &RunOptions::default()).is_err());
        let dup = vec![SubsectionSpec::new("x", 0.0, LinearMock { gain: 1.0 }); 2];
        assert!(run_reservoir(&dup, &p, 100.0, &RunOptions::default()).is_err());
    }

    #[test]
    fn failures_are_aggregated_by_id() {
        let bad = SurrogateParams { leak_gamma: 2.0, ..Default::default() };
        let specs = vec![
            SubsectionSpec::new("good", 0.0, SurrogateParams::default()),
            SubsectionSpec::new("bad-1", 0.0, bad.clone()),
            SubsectionSpec::new("bad-2", 0.0, bad),
        ];
        match run_reservoir(&specs, &sine(10, 0.01), 100.0, &RunOptions::default()) {
            Err(Error::Subsections(f)) => {
                assert_eq!(f.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>(), vec!["bad-1", "bad-2"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let specs = h_const_grid(3, -1.6, 1.6, &SurrogateParams::default());
        let run = run_reservoir(&specs, &sine(30, 0.01), 100.0, &RunOptions::default()).unwrap();
        let dir = std::env::temp_dir().join(format!("skyrc-fm-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("features.csv");
        run.features.write_csv(&path).unwrap();
        let back = FeatureMatrix::read_csv(&path).unwrap();
        assert_eq!(back, run.features);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn grid_spacing() {
        let specs = h_const_grid(41, -1.6, 1.6, &());
        assert_eq!(specs.len(), 41);
        assert_eq!(specs[0].h_const, -1.6);
        assert_eq!(specs[40].h_const, 1.6);
        assert!((specs[20].h_const).abs() < 1e-15);
        assert!((specs[1].h_const - specs[0].h_const - 0.08).abs() < 1e-12);
    }
}
