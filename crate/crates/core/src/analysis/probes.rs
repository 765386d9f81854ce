//! Reservoir characterisation runs: memory, nonlinearity and fading.

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Reservoir};
use crate::encoding::{two_cycle_protocol, Segment};
use crate::error::{Error, Result};
use crate::harness::{play, RunOptions};
use crate::rng::StreamKey;

/// Drive layout shared by the probes: zero field for `lead`, two cycles of
/// `period`, then `tail` seconds of zero field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSpec {
    pub lead: f64,
    pub period: f64,
    pub tail: f64,
    /// Drive and sampling rate, Hz.
    pub rate: f64,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { lead: 2.0, period: 0.5, tail: 1.0, rate: 100.0, seed: 0 }
    }
}

impl ProbeSpec {
    fn index(&self, t: f64) -> usize {
        (t * self.rate).round() as usize
    }

    fn drive_start(&self) -> usize {
        self.index(self.lead)
    }

    fn drive_end(&self) -> usize {
        self.index(self.lead + 2.0 * self.period)
    }

    fn stream(&self, item: u32) -> StreamKey {
        StreamKey::new(self.seed, 0x5052_4f42, item)
    }

    fn run<S: Reservoir + Clone>(&self, start: &S, first: Segment, amplitude: f64, h_const: f64, noise: u32) -> Result<Vec<f64>> {
        let protocol = two_cycle_protocol(self.lead, first, amplitude, self.period, self.rate, self.tail)?;
        let mut state = start.clone();
        state.reseed(self.stream(noise));
        Ok(play(&mut state, &protocol, h_const, 1.0, self.rate, &RunOptions::default())?.voltages)
    }
}

/// `rms(a - b) / rms(a - rest)` over `range`.
pub fn normalized_rms_difference(a: &[f64], b: &[f64], rest: f64, range: std::ops::Range<usize>) -> f64 {
    let n = range.len() as f64;
    let diff = range.clone().map(|k| (a[k] - b[k]).powi(2)).sum::<f64>() / n;
    let scale = range.map(|k| (a[k] - rest).powi(2)).sum::<f64>() / n;
    if scale == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (diff / scale).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryProbe {
    pub times: Vec<f64>,
    pub sine_sine: Vec<f64>,
    pub square_sine: Vec<f64>,
    /// Second-cycle normalised RMS difference between the two inputs.
    pub divergence: f64,
    /// Same measure between two sine-sine runs that share the reset but not
    /// the thermal noise of the drive phase.
    pub noise_floor: f64,
}

impl MemoryProbe {
    /// `divergence / noise_floor` (infinite for a noiseless backend with
    /// nonzero divergence).
    pub fn signal_to_noise(&self) -> f64 {
        if self.noise_floor == 0.0 {
            if self.divergence == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.divergence / self.noise_floor
        }
    }
}

/// Sine-sine vs square-sine from one shared reset.
pub fn memory_probe<B: Backend>(backend: &B, h_const: f64, amplitude: f64, spec: &ProbeSpec) -> Result<MemoryProbe>
where
    B::State: Clone,
{
    let start = backend.reset(h_const, 1.0 / spec.rate, spec.stream(0))?;
    let sine_sine = spec.run(&start, Segment::Sine, amplitude, h_const, 1)?;
    let square_sine = spec.run(&start, Segment::Square, amplitude, h_const, 1)?;
    let repeat = spec.run(&start, Segment::Sine, amplitude, h_const, 2)?;
    let rest = sine_sine[spec.drive_start()];
    // Readings at t_k reflect the interval before t_k, hence the shift.
    let second = spec.index(spec.lead + spec.period) + 1..spec.drive_end() + 1;
    if second.end > sine_sine.len() {
        return Err(Error::InvalidParams("memory probe needs a tail of at least one sample".into()));
    }
    Ok(MemoryProbe {
        times: (0..sine_sine.len()).map(|k| k as f64 / spec.rate).collect(),
        divergence: normalized_rms_difference(&sine_sine, &square_sine, rest, second.clone()),
        noise_floor: normalized_rms_difference(&sine_sine, &repeat, rest, second),
        sine_sine,
        square_sine,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityProbe {
    pub amplitudes: Vec<f64>,
    /// `V(probe_time)` per amplitude.
    pub voltages: Vec<f64>,
    /// Voltage at drive onset (the zero-amplitude response).
    pub rest: f64,
    /// Slope of the least-squares line through the origin of `(A, V - rest)`.
    pub slope: f64,
    /// `|residual| / |V - rest|` of that fit.
    pub relative_residual: f64,
    pub nonlinear: bool,
    pub sign_change: bool,
}

/// Relative residual above which the response is called nonlinear.
pub const LINEARITY_TOLERANCE: f64 = 0.05;

/// Fits `y ≈ s x` and returns `(s, |y - s x| / |y|)`.
pub fn origin_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum::<f64>().sqrt();
    (slope, if norm > 0.0 { res / norm } else { 0.0 })
}

/// Two-cycle sine at each amplitude from one shared reset and noise stream;
/// records `V(probe_time)`.
pub fn nonlinearity_probe<B: Backend>(
    backend: &B,
    h_const: f64,
    amplitudes: &[f64],
    probe_time: f64,
    spec: &ProbeSpec,
) -> Result<NonlinearityProbe>
where
    B::State: Clone,
{
    if amplitudes.len() < 5 {
        return Err(Error::InvalidParams(format!("need >= 5 amplitudes, got {}", amplitudes.len())));
    }
    let k = spec.index(probe_time);
    let start = backend.reset(h_const, 1.0 / spec.rate, spec.stream(0))?;
    let mut voltages = Vec::with_capacity(amplitudes.len());
    let mut rest = 0.0;
    for &a in amplitudes {
        let trace = spec.run(&start, Segment::Sine, a, h_const, 1)?;
        if k >= trace.len() {
            return Err(Error::InvalidParams(format!("probe time {probe_time} s beyond the protocol")));
        }
        rest = trace[spec.drive_start()];
        voltages.push(trace[k]);
    }
    let dv: Vec<f64> = voltages.iter().map(|v| v - rest).collect();
    let (slope, relative_residual) = origin_fit(amplitudes, &dv);
    let sign_change = dv.iter().any(|&v| v > 0.0) && dv.iter().any(|&v| v < 0.0);
    Ok(NonlinearityProbe {
        amplitudes: amplitudes.to_vec(),
        voltages,
        rest,
        slope,
        relative_residual,
        nonlinear: relative_residual > LINEARITY_TOLERANCE,
        sign_change,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingProbe {
    pub times: Vec<f64>,
    pub voltages: Vec<f64>,
    /// Smoothed reference level before the drive.
    pub initial: f64,
    /// Largest smoothed `|V - initial|` from drive onset on.
    pub peak_deviation: f64,
    /// Seconds after the drive ends until the smoothed deviation first drops
    /// below 1 % of the peak; `None` if not within the tail.
    pub horizon: Option<f64>,
}

/// Return threshold as a fraction of the peak deviation.
pub const FADING_FRACTION: f64 = 0.01;

/// Trailing moving average over `window` samples (1: unsmoothed).
pub fn trailing_mean(v: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for i in 0..v.len() {
        acc += v[i];
        if i >= w {
            acc -= v[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

/// Two sine cycles, then `spec.tail` seconds of zero drive.
pub fn fading_probe<B: Backend>(
    backend: &B,
    h_const: f64,
    amplitude: f64,
    smoothing: usize,
    spec: &ProbeSpec,
) -> Result<FadingProbe>
where
    B::State: Clone,
{
    let start = backend.reset(h_const, 1.0 / spec.rate, spec.stream(0))?;
    let voltages = spec.run(&start, Segment::Sine, amplitude, h_const, 1)?;
    let smooth = trailing_mean(&voltages, smoothing);
    let (on, off) = (spec.drive_start(), spec.drive_end());
    if on == 0 || off >= voltages.len() {
        return Err(Error::InvalidParams("fading probe needs a nonzero lead and tail".into()));
    }
    let initial = smooth[on];
    let peak_deviation = smooth[on..].iter().fold(0.0, |m: f64, v| m.max((v - initial).abs()));
    let horizon = smooth[off..]
        .iter()
        .position(|v| (v - initial).abs() < FADING_FRACTION * peak_deviation)
        .map(|n| n as f64 / spec.rate);
    Ok(FadingProbe {
        times: (0..voltages.len()).map(|k| k as f64 / spec.rate).collect(),
        voltages,
        initial,
        peak_deviation,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::mock::{LinearMock, RelaxingMock};
    use crate::backend::SurrogateParams;

    #[test]
    fn memoryless_mock_has_no_divergence() {
        let p = memory_probe(&LinearMock { gain: 2.0 }, 1.12, 24.0, &ProbeSpec::default()).unwrap();
        assert_eq!(p.divergence, 0.0);
        assert_eq!(p.noise_floor, 0.0);
    }

    #[test]
    fn leaky_surrogate_remembers() {
        let p = memory_probe(&SurrogateParams::default(), 1.12, 24.0, &ProbeSpec::default()).unwrap();
        assert!(p.divergence > 1e-3, "{}", p.divergence);
        assert_eq!(p.noise_floor, 0.0);
        assert_eq!(p.signal_to_noise(), f64::INFINITY);
    }

    #[test]
    fn linear_backends_pass_the_linear_fit() {
        let amps = [8.0, 16.0, 24.0, 32.0, 40.0];
        let spec = ProbeSpec::default();
        let lin = nonlinearity_probe(&LinearMock { gain: 1.0 }, 0.0, &amps, 2.55, &spec).unwrap();
        assert!(!lin.nonlinear);
        let relax = nonlinearity_probe(&RelaxingMock { gain: 0.3, tau: 0.2 }, 0.5, &amps, 2.5, &spec).unwrap();
        assert!(relax.relative_residual < 1e-12, "{}", relax.relative_residual);
        assert!(!relax.nonlinear);
        assert_eq!(relax.voltages.len(), 5);
    }

    #[test]
    fn surrogate_is_nonlinear() {
        let amps = [8.0, 16.0, 24.0, 48.0, 96.0];
        let p = nonlinearity_probe(&SurrogateParams::default(), 1.0, &amps, 2.5, &ProbeSpec::default()).unwrap();
        assert!(p.nonlinear, "{p:?}");
    }

    #[test]
    fn too_few_amplitudes() {
        assert!(nonlinearity_probe(&LinearMock { gain: 1.0 }, 0.0, &[1.0, 2.0], 2.5, &ProbeSpec::default()).is_err());
    }

    #[test]
    fn integrator_never_returns() {
        let s = SurrogateParams { leak_gamma: 1.0, ..Default::default() };
        let f = fading_probe(&s, 1.0, 24.0, 1, &ProbeSpec { tail: 5.0, ..Default::default() }).unwrap();
        assert!(f.peak_deviation > 0.0);
        assert_eq!(f.horizon, None);
    }

    #[test]
    fn half_leak_matches_geometric_decay() {
        let s = SurrogateParams { leak_gamma: 0.5, feedback_gain: 0.2, ..Default::default() };
        let spec = ProbeSpec::default();
        let f = fading_probe(&s, 0.8, 24.0, 1, &spec).unwrap();
        let end = f.voltages[spec.drive_end()];
        let closed = ((end.abs() / (FADING_FRACTION * f.peak_deviation)).log2()).ceil().max(0.0) / spec.rate;
        let h = f.horizon.unwrap();
        assert!((h - closed).abs() <= 1.0 / spec.rate + 1e-12, "{h} vs {closed}");
    }

    #[test]
    fn trailing_mean_edges() {
        assert_eq!(trailing_mean(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(trailing_mean(&[1.0, 2.0], 1), vec![1.0, 2.0]);
    }
}
