use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sin_turn, FieldProtocol};
use crate::error::{Error, Result};
use crate::rng::aux_rng;

const WAVEFORM_STREAM: u32 = 0x5741_5645;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Sine,
    Square,
}

impl Segment {
    /// Target label: `+1` for sine, `-1` for square.
    pub fn label(self) -> f64 {
        match self {
            Segment::Sine => 1.0,
            Segment::Square => -1.0,
        }
    }
}

/// Which segments to emit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPlan {
    /// `count` segments, each sine or square with equal odds.
    Random { count: usize },
    Explicit(Vec<Segment>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub segments: SegmentPlan,
    /// Oe.
    pub amplitude: f64,
    /// Seconds per segment.
    pub period: f64,
    pub seed: u64,
    /// Drive samples per second.
    pub sample_rate: f64,
}

impl Default for WaveformSpec {
    fn default() -> Self {
        Self { segments: SegmentPlan::Random { count: 50 }, amplitude: 24.0, period: 1.0, seed: 1, sample_rate: 100.0 }
    }
}

/// A generated waveform task.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub protocol: FieldProtocol,
    /// `±1` per drive sample.
    pub labels: Vec<f64>,
    pub segments: Vec<Segment>,
    pub samples_per_segment: usize,
}

impl WaveformSpec {
    pub fn samples_per_segment(&self) -> Result<usize> {
        let n = self.period * self.sample_rate;
        let rounded = n.round();
        if !(rounded >= 4.0) || (n - rounded).abs() > 1e-9 * rounded {
            return Err(Error::InvalidProtocol(format!(
                "period {} s at {} Hz is not a whole number (>= 4) of samples",
                self.period, self.sample_rate
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidProtocol(format!("amplitude {} must be positive", self.amplitude)));
        }
        if !(self.period > 0.0 && self.sample_rate > 0.0) {
            return Err(Error::InvalidProtocol("period and sample_rate must be positive".into()));
        }
        let empty = match &self.segments {
            SegmentPlan::Random { count } => *count == 0,
            SegmentPlan::Explicit(list) => list.is_empty(),
        };
        if empty {
            return Err(Error::InvalidProtocol("waveform needs at least one segment".into()));
        }
        self.samples_per_segment().map(|_| ())
    }

    pub fn resolve_segments(&self) -> Vec<Segment> {
        match &self.segments {
            SegmentPlan::Explicit(list) => list.clone(),
            SegmentPlan::Random { count } => {
                let mut rng = aux_rng(self.seed, WAVEFORM_STREAM);
                (0..*count)
                    .map(|_| if rng.random::<bool>() { Segment::Sine } else { Segment::Square })
                    .collect()
            }
        }
    }
}

fn segment_sample(kind: Segment, j: usize, n: usize, amplitude: f64) -> f64 {
    match kind {
        Segment::Sine => amplitude * sin_turn(j, n),
        Segment::Square if 2 * j < n => amplitude,
        Segment::Square => -amplitude,
    }
}

/// One full period per segment, sampled at `spec.sample_rate`.
pub fn generate_waveform(spec: &WaveformSpec) -> Result<Waveform> {
    spec.validate()?;
    let n = spec.samples_per_segment()?;
    let segments = spec.resolve_segments();
    let mut values = Vec::with_capacity(n * segments.len());
    let mut labels = Vec::with_capacity(n * segments.len());
    for &kind in &segments {
        for j in 0..n {
            values.push(segment_sample(kind, j, n, spec.amplitude));
            labels.push(kind.label());
        }
    }
    Ok(Waveform { protocol: FieldProtocol::new(1.0 / spec.sample_rate, values)?.with_nominal_amplitude(spec.amplitude)?, labels, segments, samples_per_segment: n })
}

/// Probe drive: `lead` seconds of zero field, then two cycles of period
/// `period` (first cycle `first`, second cycle sine), then `tail` seconds of
/// zero field.
pub fn two_cycle_protocol(
    lead: f64,
    first: Segment,
    amplitude: f64,
    period: f64,
    sample_rate: f64,
    tail: f64,
) -> Result<FieldProtocol> {
    let spec = WaveformSpec {
        segments: SegmentPlan::Explicit(vec![first, Segment::Sine]),
        amplitude,
        period,
        seed: 0,
        sample_rate,
    };
    let mut protocol = generate_waveform(&spec)?.protocol;
    let spacing = 1.0 / sample_rate;
    let lead_len = (lead * sample_rate).round() as usize;
    if lead_len > 0 {
        protocol = FieldProtocol::zeros(spacing, lead_len)?.concat(&protocol)?;
    }
    let tail_len = (tail * sample_rate).round() as usize;
    if tail_len > 0 {
        protocol = protocol.concat(&FieldProtocol::zeros(spacing, tail_len)?)?;
    }
    Ok(protocol)
}
