//! Input field protocols: the sine/square waveform task and MNIST digits.

mod mnist;
mod waveform;

pub use mnist::{
    crop, load_mnist, mnist_test_paths, preprocess_mnist, preprocess_mnist_with, uncrop, FlattenOrder, MnistImage,
    MnistLayout, DATA_DIR_ENV, MNIST_PIXELS, MNIST_SIDE, MNIST_TEST_FILES,
};
pub use waveform::{generate_waveform, two_cycle_protocol, Segment, SegmentPlan, Waveform, WaveformSpec};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sin(2π j / n)`, exact at multiples of a quarter turn.
pub fn sin_turn(j: usize, n: usize) -> f64 {
    let j = j % n;
    match (4 * j) % n == 0 {
        true => [0.0, 1.0, 0.0, -1.0][4 * j / n],
        false => (std::f64::consts::TAU * j as f64 / n as f64).sin(),
    }
}

/// Uniformly sampled AC field: value `values[j]` (Oe) holds on
/// `[j * spacing, (j + 1) * spacing)`.
///
/// `nominal_amplitude` is the amplitude the generator was asked for; a
/// subsection amplitude override rescales by `override / nominal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldProtocol {
    spacing: f64,
    values: Vec<f64>,
    nominal_amplitude: f64,
}

impl FieldProtocol {
    pub fn new(spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidProtocol(format!("sample spacing {spacing} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::InvalidProtocol("protocol has no samples".into()));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProtocol(format!("sample {j} is not finite")));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { spacing, values, nominal_amplitude: if peak > 0.0 { peak } else { 1.0 } })
    }

    pub fn with_nominal_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidProtocol(format!("nominal amplitude {amplitude} must be positive")));
        }
        self.nominal_amplitude = amplitude;
        Ok(self)
    }

    pub fn nominal_amplitude(&self) -> f64 {
        self.nominal_amplitude
    }

    /// Copy whose nominal amplitude is `amplitude`.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        let factor = amplitude / self.nominal_amplitude;
        self.scaled(factor).with_nominal_amplitude(amplitude)
    }

    /// All-zero drive of `len` samples.
    pub fn zeros(spacing: f64, len: usize) -> Result<Self> {
        Self::new(spacing, vec![0.0; len])
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Drive samples per second.
    pub fn rate(&self) -> f64 {
        1.0 / self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 * self.spacing
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            spacing: self.spacing,
            values: self.values.iter().map(|v| v * factor).collect(),
            nominal_amplitude: self.nominal_amplitude * factor.abs().max(f64::MIN_POSITIVE),
        }
    }

    /// Appends `other`, which must share the spacing.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if (self.spacing - other.spacing).abs() > 1e-12 * self.spacing {
            return Err(Error::InvalidProtocol("cannot join protocols with different spacings".into()));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(self.spacing, values)?.with_nominal_amplitude(self.nominal_amplitude.max(other.nominal_amplitude))
    }

    /// Two-column `t,h_ac` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t,h_ac\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.time(j), v));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(sin_turn(0, 20), 0.0);
        assert_eq!(sin_turn(5, 20), 1.0);
        assert_eq!(sin_turn(10, 20), 0.0);
        assert_eq!(sin_turn(15, 20), -1.0);
        assert_eq!(sin_turn(20, 20), 0.0);
        assert_eq!(sin_turn(50, 100), 0.0);
        assert!((sin_turn(3, 20) - (0.3 * std::f64::consts::PI).sin()).abs() < 1e-15);
        // Odd n has no quarter points besides zero.
        assert!((sin_turn(1, 7) - (std::f64::consts::TAU / 7.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn protocol_validation() {
        assert!(FieldProtocol::new(0.0, vec![1.0]).is_err());
        assert!(FieldProtocol::new(0.01, vec![]).is_err());
        assert!(FieldProtocol::new(0.01, vec![f64::NAN]).is_err());
        let p = FieldProtocol::new(0.01, vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(p.peak(), 2.0);
        assert!((p.duration() - 0.03).abs() < 1e-15);
        assert_eq!(p.concat(&p).unwrap().len(), 6);
        assert!(p.concat(&FieldProtocol::new(0.02, vec![0.0]).unwrap()).is_err());
    }

    #[test]
    fn csv_export() {
        let dir = std::env::temp_dir().join(format!("skyrc-proto-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.csv");
        FieldProtocol::new(0.5, vec![1.0, 2.0]).unwrap().write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,h_ac\n0,1\n0.5,2\n");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
