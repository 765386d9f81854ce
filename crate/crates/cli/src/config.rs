//! TOML run configuration: schema, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use skyrc::analysis::{ProbeSpec, DEFAULT_MZ_THRESHOLD, DEFAULT_SV_THRESHOLD, SKYRMION_MAX_AREA_UM2};
use skyrc::backend::{BackendConfig, MicromagneticConfig, SurrogateParams};
use skyrc::encoding::{mnist_test_paths, MnistLayout, SegmentPlan, WaveformSpec, DATA_DIR_ENV};
use skyrc::harness::{h_const_grid, RunOptions, SubsectionSpec, SNAPSHOT_INTERVAL};
use skyrc::pipeline::{presets, MnistEncoding, H_CONST_BAND, MNIST_AMPLITUDES};
use skyrc::readout::{Ridge, SplitSpec};

pub const SCHEMA_VERSION: u32 = 1;

pub const PROBES: [&str; 5] = ["memory", "nonlinearity", "fading", "dimensionality", "drift"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Waveform,
    Mnist,
    Sweep,
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeMode {
    TraceScaled,
    Absolute,
}

/// `[backend]`: a named preset or a full backend table.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum BackendSection {
    Preset { preset: String },
    Config(BackendConfig),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsectionRow {
    pub id: Option<String>,
    pub h_const: f64,
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub count: usize,
    #[serde(default = "band_lo")]
    pub lo: f64,
    #[serde(default = "band_hi")]
    pub hi: f64,
    /// Per-subsection amplitudes (Oe), or one value for all.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

fn band_lo() -> f64 {
    H_CONST_BAND.0
}

fn band_hi() -> f64 {
    H_CONST_BAND.1
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub segments: Option<usize>,
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistSection {
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Leading images of the file to use.
    pub count: Option<usize>,
    pub layout: Option<MnistLayout>,
    pub drive_frequency: Option<f64>,
    pub sample_rate: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingSection {
    pub data_dir: Option<PathBuf>,
    pub waveform: WaveformSection,
    pub mnist: MnistSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train: usize,
    pub test: usize,
    pub repeats: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub ridge_lambda: Option<f64>,
    pub ridge_mode: Option<RidgeMode>,
    pub split: Option<SplitSection>,
    pub shuffled_control: bool,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub h_const: Option<f64>,
    pub amplitude: Option<f64>,
    pub amplitudes: Option<Vec<f64>>,
    pub probe_time: Option<f64>,
    pub smoothing: Option<usize>,
    pub tail: Option<f64>,
    pub sv_threshold: Option<f64>,
    pub drift_window: Option<usize>,
    /// Stored FeatureMatrix CSV for dimensionality / drift.
    pub features: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Device preset names.
    pub devices: Vec<String>,
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSection {
    pub include_bias: Option<bool>,
    pub snapshot_interval: Option<f64>,
    pub mz_threshold: Option<f64>,
    pub max_skyrmion_area_um2: Option<f64>,
}

/// Raw file contents.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u32,
    pub task: Task,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub backend: BackendSection,
    #[serde(default)]
    pub subsections: Vec<SubsectionRow>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub encoding: EncodingSection,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub harness: HarnessSection,
}

/// A problem tied to a config key (and its line when found).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

/// Flag overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub backend: Option<String>,
}

/// Resolved configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub text: String,
    pub task: Task,
    pub seed: u64,
    pub output: PathBuf,
    pub backend: BackendConfig,
    pub backend_label: String,
    pub subsections: Vec<SubsectionSpec>,
    pub options: RunOptions,
    pub waveform: WaveformSpec,
    pub mnist: MnistEncoding,
    pub mnist_paths: (PathBuf, PathBuf),
    pub mnist_count: Option<usize>,
    pub ridge: Ridge,
    pub split: SplitSpec,
    pub shuffled_control: bool,
    pub probe: ProbeSettings,
    pub sweep_devices: Vec<(String, MicromagneticConfig)>,
    pub sweep_amplitudes: Vec<f64>,
    /// Unspecified defaults in effect, for `validate`.
    pub decisions: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ProbeSettings {
    pub h_const: f64,
    pub amplitude: f64,
    pub amplitudes: Vec<f64>,
    pub probe_time: f64,
    pub smoothing: usize,
    pub spec: ProbeSpec,
    pub sv_threshold: f64,
    pub drift_window: usize,
    pub features: Option<PathBuf>,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with(leaf) && t[leaf.len()..].trim_start().starts_with('=')
        })
        .map(|i| i + 1)
}

pub fn preset_backend(name: &str) -> Option<BackendConfig> {
    match name {
        "surrogate" | "surrogate-waveform" => Some(BackendConfig::Surrogate(presets::surrogate_waveform())),
        "surrogate-mnist" => Some(BackendConfig::Surrogate(presets::surrogate_mnist())),
        "ferro" => Some(BackendConfig::Micromagnetic(presets::ferro_device())),
        "micromagnetic" => presets::device("A").map(BackendConfig::Micromagnetic),
        other => other.strip_prefix("device-").and_then(presets::device).map(BackendConfig::Micromagnetic),
    }
}

struct Errors<'a> {
    text: &'a str,
    list: Vec<ConfigError>,
}

impl Errors<'_> {
    fn push(&mut self, key: &str, message: impl Into<String>) {
        self.list.push(ConfigError { line: line_of(self.text, key), key: key.to_string(), message: message.into() });
    }
}

/// Parses and validates `text`. Input paths resolve against `base` (the
/// config's directory); the output directory is relative to the caller.
pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig, Vec<ConfigError>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        vec![ConfigError { line, key: "config".into(), message: e.message().to_string() }]
    })?;
    let mut errs = Errors { text, list: Vec::new() };
    let mut decisions = Vec::new();

    if raw.schema != SCHEMA_VERSION {
        errs.push("schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", raw.schema));
    }
    let seed = overrides.seed.or(raw.seed).unwrap_or(1);
    let output = overrides.out.clone().unwrap_or_else(|| raw.output.clone().unwrap_or_else(|| "out".into()));

    let (mut backend, mut backend_label) = match &raw.backend {
        BackendSection::Preset { preset } => match preset_backend(preset) {
            Some(b) => (b, preset.clone()),
            None => {
                errs.push("preset", format!("unknown backend preset `{preset}`"));
                (BackendConfig::Surrogate(SurrogateParams::default()), preset.clone())
            }
        },
        BackendSection::Config(c) => (c.clone(), "custom".to_string()),
    };
    if let Some(kind) = &overrides.backend {
        let name = match (kind.as_str(), raw.task) {
            ("surrogate", Task::Mnist) => "surrogate-mnist",
            (k, _) => k,
        };
        match preset_backend(name) {
            Some(b) if kind == "surrogate" || kind == "micromagnetic" => {
                backend = b;
                backend_label = name.to_string();
            }
            _ => errs.push("backend", format!("--backend must be micromagnetic or surrogate, got `{kind}`")),
        }
    }
    if let Err(e) = backend.validate() {
        errs.push("backend", e.to_string());
    }
    if let BackendConfig::Micromagnetic(m) = &backend {
        decisions.push(format!(
            "micromagnetic: D = {}, K = {}, T = {}, time_map = {} units/s, dt = {:.4}, reset pulse {} Oe for {} units",
            m.params.dmi_d, m.params.anisotropy_k, m.params.temperature, m.time_map, m.params.dt, m.reset_field_oe, m.reset_pulse_time
        ));
        decisions.push(format!("Hall window: central {:.0}% of each side", 100.0 * m.window_fraction));
    }

    // Subsection table.
    let mut subsections = Vec::new();
    if !raw.subsections.is_empty() {
        for (i, row) in raw.subsections.iter().enumerate() {
            let id = row.id.clone().unwrap_or_else(|| format!("S{:02}", i + 1));
            let mut s = SubsectionSpec::new(id, row.h_const, backend.clone());
            if let Some(a) = row.amplitude {
                s = s.with_amplitude(a);
            }
            subsections.push(s);
        }
    } else if let Some(g) = &raw.grid {
        subsections = h_const_grid(g.count, g.lo, g.hi, &backend);
        match g.amplitudes.len() {
            0 => {}
            1 => subsections.iter_mut().for_each(|s| s.amplitude_override = Some(g.amplitudes[0])),
            n if n == g.count => subsections.iter_mut().zip(&g.amplitudes).for_each(|(s, &a)| s.amplitude_override = Some(a)),
            n => errs.push("amplitudes", format!("{n} amplitudes for {} subsections", g.count)),
        }
        decisions.push(format!("H_const grid: {} values evenly spaced over [{}, {}] Oe", g.count, g.lo, g.hi));
    } else if raw.task == Task::Mnist {
        subsections = skyrc::pipeline::mnist_specs(&backend);
        decisions.push(format!(
            "H_const grid: 9 values over [{}, {}] Oe, amplitudes {:?} Oe",
            H_CONST_BAND.0, H_CONST_BAND.1, MNIST_AMPLITUDES
        ));
    }
    let needs_table = matches!(raw.task, Task::Waveform | Task::Mnist) || raw.task == Task::Sweep;
    if needs_table && subsections.is_empty() {
        errs.push("subsections", "subsection table is empty");
    }
    for s in &subsections {
        if !s.h_const.is_finite() {
            errs.push("h_const", format!("subsection {} has non-finite h_const", s.id));
        }
        if s.amplitude_override.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            errs.push("amplitude", format!("subsection {} amplitude must be positive", s.id));
        }
    }
    let mut ids: Vec<&str> = subsections.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        errs.push("id", "duplicate subsection ids");
    }

    // Harness options.
    let h = &raw.harness;
    let options = RunOptions {
        seed,
        workers: overrides.workers.unwrap_or(0),
        include_bias: h.include_bias.unwrap_or(true),
        snapshot_interval: h.snapshot_interval,
        mz_threshold: h.mz_threshold.unwrap_or(DEFAULT_MZ_THRESHOLD),
        max_skyrmion_area_um2: h.max_skyrmion_area_um2.unwrap_or(SKYRMION_MAX_AREA_UM2),
    };
    if h.include_bias.is_none() {
        decisions.push("bias column appended to the features".into());
    }
    if h.mz_threshold.is_none() {
        decisions.push(format!("skyrmion binarisation threshold m_z < {DEFAULT_MZ_THRESHOLD}"));
    }
    if h.max_skyrmion_area_um2.is_none() {
        decisions.push(format!("skyrmion size cut {SKYRMION_MAX_AREA_UM2} µm², 4-connected components"));
    }

    // Encoding.
    let w = &raw.encoding.waveform;
    let waveform = WaveformSpec {
        segments: SegmentPlan::Random { count: w.segments.unwrap_or(50) },
        amplitude: w.amplitude.unwrap_or(24.0),
        period: w.period.unwrap_or(1.0),
        seed: w.seed.unwrap_or(seed),
        sample_rate: skyrc::pipeline::WAVEFORM_SAMPLE_RATE,
    };
    if raw.task == Task::Waveform {
        if let Err(e) = waveform.validate() {
            errs.push("waveform", e.to_string());
        }
    }
    let m = &raw.encoding.mnist;
    let mut mnist = MnistEncoding::default();
    if let Some(l) = m.layout {
        mnist.layout = l;
    } else if raw.task == Task::Mnist {
        let l = mnist.layout;
        decisions.push(format!(
            "MNIST crop rows {}..={}, cols {}..={}, {:?} flatten",
            l.row_start, l.row_end, l.col_start, l.col_end, l.flatten
        ));
    }
    if let Some(f) = m.drive_frequency {
        mnist.drive_frequency = f;
    }
    if let Some(r) = m.sample_rate {
        mnist.sample_rate = r;
    }
    let data_dir = raw
        .encoding
        .data_dir
        .as_ref()
        .map(|d| base.join(d))
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"));
    let defaults = mnist_test_paths(&data_dir);
    let mnist_paths = (
        m.images.as_ref().map_or(defaults.0, |p| base.join(p)),
        m.labels.as_ref().map_or(defaults.1, |p| base.join(p)),
    );
    if raw.task == Task::Mnist {
        if let Err(e) = mnist.layout.validate() {
            errs.push("layout", e.to_string());
        }
        for (key, p) in [("images", &mnist_paths.0), ("labels", &mnist_paths.1)] {
            if !p.exists() {
                errs.push(key, format!("MNIST file {} not found (set {DATA_DIR_ENV} or encoding.data_dir)", p.display()));
            }
        }
    }

    // Readout.
    let r = &raw.readout;
    let ridge = match (r.ridge_mode, r.ridge_lambda) {
        (_, None) => {
            decisions.push("ridge λ = 1e-6 · tr(XᵀX) / F".into());
            Ridge::default()
        }
        (Some(RidgeMode::Absolute), Some(v)) => Ridge::Absolute(v),
        (_, Some(v)) => Ridge::TraceScaled(v),
    };
    if let Err(e) = ridge.validate() {
        errs.push("ridge_lambda", e.to_string());
    }
    let split = match &r.split {
        Some(s) => SplitSpec { train_n: s.train, test_n: s.test, repeats: s.repeats, seed },
        None => {
            if raw.task == Task::Mnist {
                decisions.push("split 2000 train / 500 test / 5 repeats".into());
            }
            SplitSpec { train_n: 2000, test_n: 500, repeats: 5, seed }
        }
    };
    if raw.task == Task::Mnist {
        let available = m.count.unwrap_or(split.train_n + split.test_n);
        if let Err(e) = split.validate(available) {
            errs.push("split", e.to_string());
        }
    }

    // Probe.
    let p = &raw.probe;
    let probe = ProbeSettings {
        h_const: p.h_const.unwrap_or(1.12),
        amplitude: p.amplitude.unwrap_or(24.0),
        amplitudes: p.amplitudes.clone().unwrap_or_else(|| vec![12.0, 24.0, 36.0, 48.0, 60.0]),
        probe_time: p.probe_time.unwrap_or(2.5),
        smoothing: p.smoothing.unwrap_or(25),
        spec: ProbeSpec { tail: p.tail.unwrap_or(1.0), seed, ..ProbeSpec::default() },
        sv_threshold: p.sv_threshold.unwrap_or(DEFAULT_SV_THRESHOLD),
        drift_window: p.drift_window.unwrap_or(100),
        features: p.features.as_ref().map(|f| base.join(f)),
    };
    if p.sv_threshold.is_none() {
        decisions.push(format!("singular-value threshold {DEFAULT_SV_THRESHOLD} of σ₁"));
    }
    if probe.amplitudes.len() < 5 {
        errs.push("amplitudes", "nonlinearity probe needs at least 5 amplitudes");
    }
    if let Some(f) = &probe.features {
        if !f.exists() {
            errs.push("features", format!("feature file {} not found", f.display()));
        }
    }

    // Sweep.
    let mut sweep_devices = Vec::new();
    if raw.task == Task::Sweep {
        let names = if raw.sweep.devices.is_empty() {
            vec!["A".to_string(), "B".into(), "C".into(), "D".into()]
        } else {
            raw.sweep.devices.clone()
        };
        for n in names {
            let short = n.strip_prefix("device-").unwrap_or(&n).to_string();
            match presets::device(&short) {
                Some(d) => sweep_devices.push((short, d)),
                None => errs.push("devices", format!("unknown device `{n}` (A, B, C or D)")),
            }
        }
        if options.snapshot_interval.is_none() {
            decisions.push(format!("skyrmion snapshots every {SNAPSHOT_INTERVAL} s of protocol time"));
        }
    }
    let sweep_amplitudes = if raw.sweep.amplitudes.is_empty() { vec![24.0, 48.0] } else { raw.sweep.amplitudes.clone() };

    if !errs.list.is_empty() {
        return Err(errs.list);
    }
    Ok(RunConfig {
        text: text.to_string(),
        task: raw.task,
        seed,
        output,
        backend,
        backend_label,
        subsections,
        options,
        waveform,
        mnist,
        mnist_paths,
        mnist_count: m.count,
        ridge,
        split,
        shuffled_control: r.shuffled_control,
        probe,
        sweep_devices,
        sweep_amplitudes,
        decisions,
    })
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![ConfigError { line: None, key: "config".into(), message: format!("{}: {e}", path.display()) }]
    })?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    parse(&text, &base, overrides)
}
